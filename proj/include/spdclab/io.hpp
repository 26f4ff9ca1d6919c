#ifndef SPDCLAB_IO_HPP
#define SPDCLAB_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "spdclab/core.hpp"

namespace spdclab {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class OutputFile {
 public:
  OutputFile(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    for (const auto& h : header) out_ << "# " << h << '\n';
  }

  const std::filesystem::path& path() const { return path_; }

 protected:
  std::filesystem::path path_;
  std::ofstream out_;
};

class CsvWriter : public OutputFile {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            std::initializer_list<const char*> columns)
      : OutputFile(path, header), ncol_(columns.size()) {
    bool first = true;
    for (const char* c : columns) {
      out_ << (first ? "" : ",") << c;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    if (values.size() != ncol_) throw ArgumentError("csv row has the wrong number of columns");
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << fmt_num(v);
      first = false;
    }
    out_ << '\n';
  }

 private:
  std::size_t ncol_;
};

class KeyValueWriter : public OutputFile {
 public:
  using OutputFile::OutputFile;

  void put(const std::string& key, double v) { out_ << key << " = " << fmt_num(v) << '\n'; }
  void put(const std::string& key, const std::string& v) { out_ << key << " = " << v << '\n'; }
  void put(const std::string& key, const char* v) { out_ << key << " = " << v << '\n'; }
  void put(const std::string& key, std::uint64_t v) { out_ << key << " = " << v << '\n'; }
  void put(const std::string& key, const std::vector<double>& v) {
    out_ << key << " = [";
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? ", " : "") << fmt_num(v[i]);
    out_ << "]\n";
  }
};

}  // namespace spdclab

#endif  // SPDCLAB_IO_HPP
