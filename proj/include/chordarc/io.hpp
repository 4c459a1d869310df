#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace chordarc {

// Streaming JSON writer. Doubles are printed with 17 significant digits
// (%.17g); non-finite values become null. Keys keep insertion order, so
// identical inputs give byte-identical output.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);

  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::size_t v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null();

  template <class T>
  JsonWriter& field(const std::string& k, const T& v) {
    key(k);
    return value(v);
  }
  JsonWriter& array(const std::string& k, const std::vector<double>& v);

  const std::string& str() const { return out_; }

 private:
  void before_value();
  void newline();

  std::string out_;
  struct Frame {
    bool array;
    bool empty;
  };
  std::vector<Frame> stack_;
  bool after_key_ = false;
};

std::string format_double(double v);
std::string json_escape(const std::string& s);

// Write to a sibling temporary file and rename over the target. Parent
// directories are created.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Log-log plot of (x, y) points with an optional fitted line y = e^b x^m.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series, const double* slope, const double* intercept);

}  // namespace chordarc
