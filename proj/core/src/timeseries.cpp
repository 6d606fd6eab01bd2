#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "nsnv/instances.hpp"

namespace nsnv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  for (;;) {
    const auto pos = line.find(',');
    cells.push_back(trim(line.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return cells;
}

double parse_real(std::string_view cell, std::size_t line_no) {
  if (cell.empty()) throw ParseError("line " + std::to_string(line_no) + ": missing value", line_no);
  if (cell.front() == '+') cell.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(x))
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) + "' as a number",
                     line_no);
  return x;
}

}  // namespace

TimeSeries parse_timeseries(std::istream& in, const std::string& value_column) {
  std::string line;
  std::size_t line_no = 0;
  TimeSeries series;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    const auto cells = split_commas(view);
    if (!header_seen) {
      if (cells.size() != 2 || cells[0] != "t" || cells[1] != value_column)
        throw ParseError("line " + std::to_string(line_no) + ": expected header 't," + value_column + "'", line_no);
      header_seen = true;
      continue;
    }
    if (cells.size() > 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected 2 columns, found " + std::to_string(cells.size()),
                       line_no);
    if (cells[0].empty()) throw ParseError("line " + std::to_string(line_no) + ": missing index", line_no);
    const double value = parse_real(cells.size() == 2 ? cells[1] : std::string_view{}, line_no);
    series.index.emplace_back(cells[0]);
    series.values.push_back(value);
  }
  if (!header_seen) throw ParseError("empty input: expected header 't," + value_column + "'", line_no);
  return series;
}

TimeSeries load_timeseries(const std::filesystem::path& path, const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_timeseries(in, value_column);
}

void write_timeseries(const std::filesystem::path& path, const TimeSeries& series, const std::string& value_column) {
  if (series.index.size() != series.values.size()) throw DomainError("time series index and values differ in length");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t," << value_column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof buf, series.values[i]);  // shortest round-trip form
    out << series.index[i] << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series, std::size_t test_len) {
  if (test_len == 0) throw DomainError("test length must be positive");
  if (test_len >= series.size())
    throw DomainError("test length " + std::to_string(test_len) + " leaves no training data in a series of length " +
                      std::to_string(series.size()));
  const std::size_t cut = series.size() - test_len;
  TimeSeries train, test;
  const bool has_index = series.index.size() == series.size();
  train.values.assign(series.values.begin(), series.values.begin() + cut);
  test.values.assign(series.values.begin() + cut, series.values.end());
  if (has_index) {
    train.index.assign(series.index.begin(), series.index.begin() + cut);
    test.index.assign(series.index.begin() + cut, series.index.end());
  }
  return {std::move(train), std::move(test)};
}

DemandFamily fit_residual_family(std::span<const double> train, std::span<const double> train_predictions,
                                 MeanBounds bounds) {
  if (train.size() != train_predictions.size())
    throw DomainError("training demands and predictions differ in length");
  if (train.empty()) throw DomainError("residual family needs at least one training period");
  std::vector<double> residuals(train.size());
  for (std::size_t s = 0; s < train.size(); ++s) residuals[s] = train[s] - train_predictions[s];
  return DemandFamily::shifted_noise(std::move(residuals), bounds);
}

}  // namespace nsnv
