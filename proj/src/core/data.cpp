#include "data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "rng.hpp"

namespace mmsfm {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && s[k] == ' ') ++k;
  return s.substr(k);
}

double parse_double(const std::string& field, long line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    fail(Errc::parse_error, "line " + std::to_string(line) + ": cannot parse number '" + field + "'",
         line);
  }
  if (!std::isfinite(v)) {
    fail(Errc::parse_error, "line " + std::to_string(line) + ": non-finite value", line);
  }
  return v;
}

std::string header_for(std::size_t dim, bool with_time) {
  std::string h = with_time ? "t" : "";
  for (std::size_t j = 0; j < dim; ++j) {
    if (!h.empty()) h += ',';
    h += "x_" + std::to_string(j);
  }
  return h;
}

void check_header(const std::vector<std::string>& fields, bool with_time) {
  const std::size_t offset = with_time ? 1 : 0;
  if (fields.size() <= offset) fail(Errc::parse_error, "line 1: header has no coordinate columns", 1);
  if (with_time && fields[0] != "t") fail(Errc::parse_error, "line 1: first column must be 't'", 1);
  for (std::size_t j = offset; j < fields.size(); ++j) {
    if (fields[j] != "x_" + std::to_string(j - offset)) {
      fail(Errc::parse_error, "line 1: expected column x_" + std::to_string(j - offset), 1);
    }
  }
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  require(times_.size() >= 2, "time grid needs at least 2 points");
  require(times_.front() == 0.0 && times_.back() == 1.0, "time grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    require(times_[i] > times_[i - 1], "time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(std::size_t points) {
  require(points >= 2, "uniform grid needs at least 2 points");
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return TimeGrid(std::move(t));
}

std::vector<double> TimeGrid::intervals() const {
  std::vector<double> h(times_.size() - 1);
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) h[i] = interval(i);
  return h;
}

std::vector<NamedGrid> builtin_grids() {
  return {
      {"T1", TimeGrid({0.0, 0.17, 0.33, 0.5, 0.67, 0.83, 1.0})},
      {"T2", TimeGrid({0.0, 0.08, 0.38, 0.42, 0.54, 0.85, 1.0})},
      {"T3", TimeGrid({0.0, 0.2, 0.27, 0.3, 0.88, 0.98, 1.0})},
  };
}

TimeGrid builtin_grid(const std::string& name) {
  for (auto& g : builtin_grids()) {
    if (g.name == name) return g.grid;
  }
  if (name.size() >= 2 && (name[0] == 'U' || name[0] == 'u')) {
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), n);
    if (ec == std::errc() && ptr == name.data() + name.size() && n >= 2) return TimeGrid::uniform(n);
  }
  fail(Errc::invalid_input, "unknown grid '" + name + "'; valid grids: " + builtin_grid_names());
}

std::string builtin_grid_names() { return "T1, T2, T3, U<n> (n >= 2 uniform points)"; }

void MarginalDataset::validate() const {
  require(marginals.size() == grid.size(), "dataset needs one marginal per grid time");
  const std::size_t d = dim();
  require(d >= 1, "dataset dimension must be at least 1");
  for (const auto& m : marginals) {
    require(m.cols() == d, "all marginals must share one dimension");
    for (double v : m.data()) require(std::isfinite(v), "marginal samples must be finite");
  }
  require(initial_pool.empty() || initial_pool.cols() == d,
          "initial pool dimension must match the marginals");
}

MarginalDataset MarginalDataset::without(std::size_t index) const {
  require(index < marginals.size(), "held-out index out of range");
  require(index > 0 && index + 1 < marginals.size(),
          "only interior marginals can be held out (grid must keep 0 and 1)");
  std::vector<double> times;
  MarginalDataset out;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (i == index) continue;
    times.push_back(grid[i]);
    out.marginals.push_back(marginals[i]);
  }
  out.grid = TimeGrid(std::move(times));
  out.initial_pool = initial_pool;
  return out;
}

Matrix s_shape_means() {
  Matrix means(7, 2);
  for (std::size_t i = 0; i < 7; ++i) {
    means(i, 0) = 5.0 * static_cast<double>(i);
    means(i, 1) = 8.0 * std::sin(std::numbers::pi * static_cast<double>(i) / 3.0);
  }
  return means;
}

Matrix alpha_shape_means() {
  return Matrix{{25.0, 10.0}, {15.0, 2.0}, {5.0, -6.0}, {0.0, 0.0},
                {5.0, 6.0},   {15.0, -2.0}, {25.0, -10.0}};
}

Matrix shape_means(const std::string& name) {
  if (name == "s-shape" || name == "s") return s_shape_means();
  if (name == "alpha-shape" || name == "alpha") return alpha_shape_means();
  fail(Errc::invalid_input, "unknown dataset '" + name + "'; valid datasets: s-shape, alpha-shape");
}

MarginalDataset gen_gaussian_sequence(const GaussianSequenceSpec& spec, const TimeGrid& grid) {
  require(spec.means.rows() == grid.size(), "need one mean per grid time");
  require(spec.means.cols() >= 1, "means need at least one dimension");
  for (double v : spec.means.data()) require(std::isfinite(v), "means must be finite");
  require(std::isfinite(spec.std) && spec.std >= 0.0, "std must be nonnegative");

  const std::size_t d = spec.means.cols();
  MarginalDataset data;
  data.grid = grid;
  Rng rng = substream(spec.seed, 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Matrix m(spec.samples, d);
    for (std::size_t n = 0; n < spec.samples; ++n) {
      for (std::size_t j = 0; j < d; ++j) m(n, j) = spec.means(i, j) + spec.std * standard_normal(rng);
    }
    data.marginals.push_back(std::move(m));
  }
  Rng pool_rng = substream(spec.seed, 1);
  data.initial_pool = Matrix(spec.pool_samples, d);
  for (std::size_t n = 0; n < spec.pool_samples; ++n) {
    for (std::size_t j = 0; j < d; ++j) {
      data.initial_pool(n, j) = spec.means(0, j) + spec.std * standard_normal(pool_rng);
    }
  }
  return data;
}

std::string canonical_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void save_marginals(std::ostream& out, const MarginalDataset& data) {
  data.validate();
  out << header_for(data.dim(), true) << '\n';
  for (std::size_t i = 0; i < data.marginals.size(); ++i) {
    const std::string t = canonical_time(data.grid[i]);
    const Matrix& m = data.marginals[i];
    for (std::size_t n = 0; n < m.rows(); ++n) {
      out << t;
      for (double v : m.row(n)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void save_marginals(const std::string& path, const MarginalDataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  save_marginals(out, data);
  if (!out) fail(Errc::io_error, "failed writing " + path);
}

MarginalDataset load_marginals(std::istream& in, const TimeGrid& grid) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < grid.size(); ++i) index.emplace(canonical_time(grid[i]), i);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "empty marginal file", 1);
  const auto header = split_csv(strip(line));
  check_header(header, true);
  const std::size_t d = header.size() - 1;

  std::vector<std::vector<double>> rows(grid.size());
  std::vector<std::size_t> counts(grid.size(), 0);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != d + 1) {
      fail(Errc::parse_error,
           "line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
               " fields, found " + std::to_string(fields.size()),
           line_no);
    }
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      fail(Errc::parse_error,
           "line " + std::to_string(line_no) + ": time '" + fields[0] + "' is not on the grid",
           line_no);
    }
    for (std::size_t j = 0; j < d; ++j) rows[it->second].push_back(parse_double(fields[j + 1], line_no));
    ++counts[it->second];
  }

  MarginalDataset data;
  data.grid = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    data.marginals.push_back(Matrix::from_rows(counts[i], d, std::move(rows[i])));
  }
  return data;
}

MarginalDataset load_marginals(const std::string& path, const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  return load_marginals(in, grid);
}

void save_points(const std::string& path, const Matrix& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << header_for(points.cols(), false) << '\n';
  for (std::size_t n = 0; n < points.rows(); ++n) {
    const auto r = points.row(n);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
    out << '\n';
  }
  if (!out) fail(Errc::io_error, "failed writing " + path);
}

Matrix load_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "empty point file " + path, 1);
  const auto header = split_csv(strip(line));
  check_header(header, false);
  const std::size_t d = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != d) {
      fail(Errc::parse_error, "line " + std::to_string(line_no) + ": ragged row", line_no);
    }
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  return Matrix::from_rows(rows, d, std::move(values));
}

}  // namespace mmsfm
