#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "splitstep/analysis.hpp"

namespace splitstep {

/// Shortest decimal that round-trips; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// RFC 4180 CSV with LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string csv_escape(const std::string& field);

struct CurveContext {
  std::string model;
  std::string scheme;
  std::uint64_t seed = 0;
};

/// abscissa,error rows plus <stem>.json with {metric, slope, r_squared, excluded_points, model, scheme, seed}.
void write_error_curve(const std::filesystem::path& csv_path, const ErrorCurve& curve, const CurveContext& context);

/// time,msd rows plus a JSON sidecar with beta and the fitted decay.
void write_contraction(const std::filesystem::path& csv_path, const ContractionTrace& trace,
                       const CurveContext& context);

/// time,m<p>... rows.
void write_moment_trace(const std::filesystem::path& csv_path, const MomentTrace& trace);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace splitstep
