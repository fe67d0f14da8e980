#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "svlp/core_model.hpp"

namespace svlp {

// CSV dialect: comma, '.' decimal, header row, LF line endings.
// Doubles printed with %.17g so that reruns reproduce files byte-for-byte.

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : os_(path, std::ios::binary) {
        if (!os_) throw ValidationError("csv: cannot open " + path);
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }
    void numeric_row(const std::vector<double>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << fmt_g17(cells[i]);
        }
        os_ << '\n';
    }

  private:
    std::ofstream os_;
};

void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns);

}  // namespace svlp
