#include "splitstep/report_io.hpp"

#include <charconv>
#include <cmath>
#include "json.hpp"

#include "splitstep/error.hpp"

namespace splitstep {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoFailure("cannot open " + path.string() + " for writing");
  row_text(header);
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_double(v));
  row_text(fields);
}

void CsvWriter::row_text(const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    out_ << csv_escape(fields[k]);
  }
  out_ << '\n';
  if (!out_) throw IoFailure("write failed on " + path_.string());
}

void CsvWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail()) throw IoFailure("closing " + path_.string() + " failed");
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : nlohmann::json(); }

std::filesystem::path sidecar(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (out.fail()) throw IoFailure("write failed on " + path.string());
}

void write_error_curve(const std::filesystem::path& csv_path, const ErrorCurve& curve, const CurveContext& context) {
  const char* col = curve.metric == Metric::poc ? "N" : "h";
  CsvWriter csv(csv_path, {col, "error"});
  for (std::size_t k = 0; k < curve.abscissa.size(); ++k) csv.row({curve.abscissa[k], curve.errors[k]});
  csv.close();
  nlohmann::json j;
  j["metric"] = metric_name(curve.metric);
  j["slope"] = number_or_null(curve.slope);
  j["r_squared"] = number_or_null(curve.r_squared);
  j["excluded_points"] = curve.excluded;
  j["model"] = context.model;
  j["scheme"] = context.scheme;
  j["seed"] = context.seed;
  write_text(sidecar(csv_path), j.dump(2) + "\n");
}

void write_contraction(const std::filesystem::path& csv_path, const ContractionTrace& trace,
                       const CurveContext& context) {
  CsvWriter csv(csv_path, {"time", "msd"});
  for (std::size_t k = 0; k < trace.times.size(); ++k) csv.row({trace.times[k], trace.msd[k]});
  csv.close();
  nlohmann::json j;
  j["beta_theoretical"] = number_or_null(trace.beta_theoretical);
  j["fitted_decay"] = number_or_null(trace.fitted_decay);
  j["fit_start"] = trace.fit_start;
  j["non_monotone_fraction"] = trace.non_monotone_fraction;
  j["mean_step_rate"] = number_or_null(trace.mean_step_rate);
  j["window_steps"] = trace.window_steps;
  j["model"] = context.model;
  j["scheme"] = context.scheme;
  j["seed"] = context.seed;
  write_text(sidecar(csv_path), j.dump(2) + "\n");
}

void write_moment_trace(const std::filesystem::path& csv_path, const MomentTrace& trace) {
  std::vector<std::string> header{"time"};
  for (double p : trace.p_values) header.push_back("m" + format_double(p));
  CsvWriter csv(csv_path, header);
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    std::vector<double> row{trace.times[k]};
    row.insert(row.end(), trace.moments[k].begin(), trace.moments[k].end());
    csv.row(row);
  }
  csv.close();
}

}  // namespace splitstep
