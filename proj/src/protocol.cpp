#include "uqfarm/protocol.hpp"

#include <json.hpp>

namespace uqfarm::wire {

using nlohmann::json;

static json parse(const std::string& line) {
    try {
        json msg = json::parse(line);
        if (!msg.is_object() || !msg.contains("type"))
            throw ParseError("wire message without a 'type' field");
        return msg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed wire message: ") + e.what());
    }
}

std::string register_msg(const std::string& worker_id, double speed) {
    return json{{"type", "register"}, {"worker_id", worker_id}, {"speed", speed}}.dump();
}

std::string job_request(const std::string& worker_id) {
    return json{{"type", "job_request"}, {"worker_id", worker_id}}.dump();
}

std::string job_msg(const SimulationJob& job) {
    json inputs = json::array();
    for (Eigen::Index i = 0; i < job.inputs.size(); ++i) inputs.push_back(job.inputs[i]);
    return json{{"type", "job"},
                {"job_id", job.job_id},
                {"sample_id", job.sample_id},
                {"inputs", std::move(inputs)}}
        .dump();
}

std::string no_work() { return json{{"type", "no_work"}}.dump(); }

std::string result_msg(const std::string& worker_id, const SimulationResult& result) {
    json msg{{"type", "result"},
             {"worker_id", worker_id},
             {"job_id", result.job_id},
             {"status", result.status == SimStatus::Ok ? "ok" : "failed"},
             {"duration_ms", result.duration_ms}};
    if (result.status == SimStatus::Ok) {
        json series = json::array();
        for (Eigen::Index j = 0; j < result.series.rows(); ++j) {
            json row = json::array();
            for (Eigen::Index t = 0; t < result.series.cols(); ++t)
                row.push_back(result.series(j, t));
            series.push_back(std::move(row));
        }
        json summaries = json::array();
        for (Eigen::Index j = 0; j < result.summaries.size(); ++j)
            summaries.push_back(result.summaries[j]);
        msg["series"] = std::move(series);
        msg["summaries"] = std::move(summaries);
    } else {
        msg["reason"] = result.failure_reason;
    }
    return msg.dump();
}

std::string ack() { return json{{"type", "ack"}}.dump(); }

std::string heartbeat(const std::string& worker_id) {
    return json{{"type", "heartbeat"}, {"worker_id", worker_id}}.dump();
}

std::string shutdown() { return json{{"type", "shutdown"}}.dump(); }

std::string message_type(const std::string& line) { return parse(line)["type"].get<std::string>(); }

std::string field_string(const std::string& line, const std::string& key) {
    json msg = parse(line);
    if (!msg.contains(key)) throw ParseError("wire message missing field '" + key + "'");
    return msg[key].get<std::string>();
}

double field_double(const std::string& line, const std::string& key) {
    json msg = parse(line);
    if (!msg.contains(key)) throw ParseError("wire message missing field '" + key + "'");
    return msg[key].get<double>();
}

SimulationJob parse_job(const std::string& line) {
    json msg = parse(line);
    SimulationJob job;
    try {
        job.job_id = msg.at("job_id").get<std::string>();
        job.sample_id = msg.at("sample_id").get<std::int64_t>();
        auto inputs = msg.at("inputs").get<std::vector<double>>();
        job.inputs = Eigen::Map<Vector>(inputs.data(), static_cast<Eigen::Index>(inputs.size()));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad job message: ") + e.what());
    }
    return job;
}

SimulationResult parse_result(const std::string& line) {
    json msg = parse(line);
    SimulationResult result;
    try {
        result.job_id = msg.at("job_id").get<std::string>();
        result.duration_ms = msg.value("duration_ms", 0.0);
        if (msg.at("status").get<std::string>() == "ok") {
            result.status = SimStatus::Ok;
            auto series = msg.at("series").get<std::vector<std::vector<double>>>();
            auto summaries = msg.at("summaries").get<std::vector<double>>();
            result.series.resize(static_cast<Eigen::Index>(series.size()),
                                 series.empty() ? 0 : static_cast<Eigen::Index>(series[0].size()));
            for (std::size_t j = 0; j < series.size(); ++j) {
                if (series[j].size() != static_cast<std::size_t>(result.series.cols()))
                    throw ParseError("ragged series in result message");
                for (std::size_t t = 0; t < series[j].size(); ++t)
                    result.series(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) =
                        series[j][t];
            }
            result.summaries =
                Eigen::Map<Vector>(summaries.data(), static_cast<Eigen::Index>(summaries.size()));
        } else {
            result.status = SimStatus::Failed;
            result.failure_reason = msg.value("reason", std::string("unspecified"));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad result message: ") + e.what());
    }
    return result;
}

} // namespace uqfarm::wire
