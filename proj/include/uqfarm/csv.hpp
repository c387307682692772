#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "uqfarm/types.hpp"

namespace uqfarm {

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& rows);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Matrix& rows);

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Samples: header = variable names, one row per sample.
void write_samples_csv(const std::string& path, const SampleMatrix& samples);
SampleMatrix read_samples_csv(const std::string& path, SampleOrigin origin);

} // namespace uqfarm
