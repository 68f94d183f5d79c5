#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iostream>

#include "rhclus/errors.hpp"
#include "rhclus/points.hpp"
#include "rhclus/text_format.hpp"

namespace rhclus {

namespace {

void stderr_sink(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::atomic<WarningSink> g_sink{&stderr_sink};

}  // namespace

void set_warning_sink(WarningSink sink) { g_sink.store(sink ? sink : &stderr_sink); }

void warn(const std::string& message) { g_sink.load()(message); }

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), end};
}

void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << format_double(values[i]);
  }
  out << '\n';
}

Matrix materialize(const PointSource& points) {
  Matrix out(points.num_rows(), points.dims());
  for (std::size_t r = 0; r < out.rows(); ++r) points.point(r, out.row(r));
  return out;
}

}  // namespace rhclus
