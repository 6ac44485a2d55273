// csv.hpp — CSV table writer and file checksums

#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace dpnm {

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header, int precision = 17);

    void row(const std::vector<double>& values);
    void close();

private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_;
    int precision_;
};

std::string format_number(double v, int precision = 17);

// lowercase hex SHA-256 of a file's bytes
std::string file_sha256(const std::string& path);
std::string string_sha256(const std::string& data);

}  // namespace dpnm
