#pragma once

#include <string>

#include "uqfarm/simulator.hpp"

namespace uqfarm {

// Newline-delimited JSON wire protocol. One message per line, field `type`
// selects the variant, unknown fields are ignored.
namespace wire {

std::string register_msg(const std::string& worker_id, double speed);
std::string job_request(const std::string& worker_id);
std::string job_msg(const SimulationJob& job);
std::string no_work();
std::string result_msg(const std::string& worker_id, const SimulationResult& result);
std::string ack();
std::string heartbeat(const std::string& worker_id);
std::string shutdown();

// Returns the `type` field; throws ParseError on malformed lines.
std::string message_type(const std::string& line);
std::string field_string(const std::string& line, const std::string& key);
double field_double(const std::string& line, const std::string& key);

SimulationJob parse_job(const std::string& line);
SimulationResult parse_result(const std::string& line);

} // namespace wire

} // namespace uqfarm
