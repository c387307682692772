#include "uqfarm/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace uqfarm {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (c) out << ',';
            out << format_double(rows(r, c));
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Matrix& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    write_csv(out, header, rows);
}

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size())
            throw ParseError("CSV row has " + std::to_string(fields.size()) +
                             " fields, header has " + std::to_string(table.header.size()));
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& f = fields[i];
            auto res = std::from_chars(f.data(), f.data() + f.size(), row[i]);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
                throw ParseError("bad numeric field '" + f + "'");
        }
        rows.push_back(std::move(row));
    }

    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open for reading: " + path);
    return read_csv(in);
}

void write_samples_csv(const std::string& path, const SampleMatrix& samples) {
    write_csv_file(path, samples.variable_names, samples.values);
}

SampleMatrix read_samples_csv(const std::string& path, SampleOrigin origin) {
    auto table = read_csv_file(path);
    SampleMatrix samples;
    samples.variable_names = std::move(table.header);
    samples.values = std::move(table.values);
    samples.origin = origin;
    return samples;
}

} // namespace uqfarm
