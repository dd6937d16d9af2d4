#include "famc/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "famc/errors.hpp"

namespace famc {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i == line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

std::optional<long long> to_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> to_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

/// Line reader that tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next line, or nullopt at end of input.
  std::optional<std::string> next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  std::string require(const std::string& section) {
    auto line = next();
    if (!line) throw ParseError("unexpected end of file: missing " + section, line_ + 1);
    return *line;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<double> parse_reals(LineReader& reader, std::size_t count, const std::string& section) {
  const std::string line = reader.require(section);
  const auto fields = split_fields(line, ' ');
  if (fields.size() != count)
    throw ParseError(section + ": expected " + std::to_string(count) + " values, found " +
                         std::to_string(fields.size()),
                     reader.line());
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = to_real(fields[i]);
    if (!v) throw ParseError(section + ": invalid number '" + std::string(fields[i]) + "'", reader.line());
    out[i] = *v;
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void write_atoms(std::ostream& out, const std::vector<Atom>& atoms) {
  out << atoms.size() << '\n';
  for (const auto& a : atoms) {
    out << real_text(a.weight) << '\n';
    for (Eigen::Index i = 0; i < a.left.size(); ++i)
      out << (i ? " " : "") << real_text(a.left[i]);
    out << '\n';
    for (Eigen::Index i = 0; i < a.right.size(); ++i)
      out << (i ? " " : "") << real_text(a.right[i]);
    out << '\n';
  }
}

/// Reads one class block. count_line is the block's first line when the
/// caller has already consumed it.
std::vector<Atom> read_atoms(LineReader& reader, int rows, int cols, int block,
                             std::optional<std::string> count_line_in = std::nullopt) {
  const std::string where = "class block " + std::to_string(block);
  const std::string count_line =
      count_line_in ? *count_line_in : reader.require("atom count of " + where);
  const auto count = to_int(count_line);
  if (!count || *count < 0)
    throw ParseError("invalid atom count '" + count_line + "' in " + where, reader.line());
  std::vector<Atom> atoms;
  for (long long a = 0; a < *count; ++a) {
    const std::string atom = where + ", atom " + std::to_string(a + 1);
    Atom at;
    const auto w = parse_reals(reader, 1, "weight of " + atom);
    if (w[0] < 0.0) throw ParseError("negative weight in " + atom, reader.line());
    at.weight = w[0];
    at.left = to_vector(parse_reals(reader, rows, "left vector of " + atom));
    at.right = to_vector(parse_reals(reader, cols, "right vector of " + atom));
    if (std::abs(at.left.norm() - 1.0) > 1e-10 || std::abs(at.right.norm() - 1.0) > 1e-10)
      throw ParseError("non-unit vector in " + atom, reader.line());
    atoms.push_back(std::move(at));
  }
  return atoms;
}

void expect_end(LineReader& reader) {
  while (auto line = reader.next())
    if (!trim(*line).empty()) throw ParseError("unexpected trailing data", reader.line());
}

}  // namespace

// --- observations ------------------------------------------------------------

ObservationSet parse_observations(std::istream& in, ObservationFormat format,
                                  const ShapeOverride& shape) {
  LineReader reader(in);
  ObservationSet obs;
  int max_row = -1, max_col = -1, max_label = 0;
  const char sep = format == ObservationFormat::csv ? ',' : '\t';
  const std::size_t expected = format == ObservationFormat::csv ? 3 : 4;
  while (auto line = reader.next()) {
    const auto text = trim(*line);
    if (text.empty()) continue;
    if (format == ObservationFormat::csv && reader.line() == 1 && text == "row,col,label") continue;
    const auto fields = split_fields(text, sep);
    if (fields.size() != expected)
      throw ParseError("expected " + std::to_string(expected) + " fields", reader.line());
    const auto r = to_int(fields[0]), c = to_int(fields[1]), y = to_int(fields[2]);
    if (!r || !c || !y) throw ParseError("non-integer field", reader.line());
    if (expected == 4 && !to_int(fields[3])) throw ParseError("non-integer timestamp", reader.line());
    long long row = *r, col = *c;
    if (format == ObservationFormat::movielens) {
      --row;
      --col;
    }
    if (row < 0 || col < 0 || row > 1'000'000'000 || col > 1'000'000'000)
      throw ParseError("index out of range", reader.line());
    if (*y < 1) throw InvalidArgument("line " + std::to_string(reader.line()) + ": label " +
                                      std::to_string(*y) + " is below 1");
    if (*y > 1'000'000) throw ParseError("label out of range", reader.line());
    obs.samples.push_back({static_cast<int>(row), static_cast<int>(col), static_cast<int>(*y)});
    max_row = std::max(max_row, static_cast<int>(row));
    max_col = std::max(max_col, static_cast<int>(col));
    max_label = std::max(max_label, static_cast<int>(*y));
  }
  if (obs.samples.empty()) throw ParseError("no observations in input");
  obs.rows = shape.rows.value_or(max_row + 1);
  obs.cols = shape.cols.value_or(max_col + 1);
  const int default_classes = format == ObservationFormat::movielens ? 5 : std::max(max_label, 2);
  obs.classes = shape.classes.value_or(default_classes);
  obs.validate();
  return obs;
}

ObservationSet read_observations(const std::filesystem::path& path, ObservationFormat format,
                                 const ShapeOverride& shape) {
  auto in = open_in(path);
  return parse_observations(in, format, shape);
}

void write_observations(std::ostream& out, const ObservationSet& obs) {
  for (const auto& s : obs.samples) out << s.row << ',' << s.col << ',' << s.label << '\n';
}

void write_observations(const std::filesystem::path& path, const ObservationSet& obs) {
  std::ostringstream os;
  write_observations(os, obs);
  write_file_atomic(path, os.str());
}

ObservationSet remap_labels(const ObservationSet& obs, const std::map<int, int>& mapping,
                            std::optional<int> classes) {
  ObservationSet out = obs;
  int max_label = 2;
  for (auto& s : out.samples) {
    if (const auto it = mapping.find(s.label); it != mapping.end()) s.label = it->second;
    max_label = std::max(max_label, s.label);
  }
  out.classes = classes.value_or(max_label);
  out.validate();
  return out;
}

ObservationSet one_vs_rest(const ObservationSet& obs, int target) {
  std::map<int, int> mapping;
  for (int j = 1; j <= obs.classes; ++j) mapping[j] = j == target ? 1 : 2;
  return remap_labels(obs, mapping, 2);
}

DataSplit split(const ObservationSet& obs, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
      !(spec.validation_fraction_of_rest > 0.0 && spec.validation_fraction_of_rest < 1.0))
    throw InvalidArgument("split fractions must lie in (0, 1)");
  const std::size_t n = obs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(n * spec.test_fraction));
  const std::size_t rest = n - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(rest * spec.validation_fraction_of_rest));

  DataSplit out;
  for (auto* part : {&out.train, &out.validation, &out.test}) {
    part->rows = obs.rows;
    part->cols = obs.cols;
    part->classes = obs.classes;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = obs.samples[order[i]];
    if (i < n_test)
      out.test.samples.push_back(s);
    else if (i < n_test + n_val)
      out.validation.samples.push_back(s);
    else
      out.train.samples.push_back(s);
  }
  return out;
}

// --- models ------------------------------------------------------------------

void write_model(std::ostream& out, const AtomicModel& model, double lambda) {
  out << "FAM v1 " << model.rows << ' ' << model.cols << ' ' << model.classes << ' '
      << real_text(lambda) << '\n';
  for (const auto& atoms : model.per_class) write_atoms(out, atoms);
}

void write_model(std::ostream& out, const GaussianModel& model) {
  out << "FAM v1 " << model.rows << ' ' << model.cols << ' ' << model.classes << ' '
      << real_text(model.lambda) << '\n';
  out << "sigma_hat " << real_text(model.sigma_hat) << '\n';
  const auto levels =
      model.label_values.empty() ? default_label_values(model.classes) : model.label_values;
  out << "levels";
  for (double v : levels) out << ' ' << real_text(v);
  out << '\n';
  write_atoms(out, model.atoms);
}

void write_model(const std::filesystem::path& path, const AtomicModel& model, double lambda) {
  std::ostringstream os;
  write_model(os, model, lambda);
  write_file_atomic(path, os.str());
}

void write_model(const std::filesystem::path& path, const GaussianModel& model) {
  std::ostringstream os;
  write_model(os, model);
  write_file_atomic(path, os.str());
}

StoredModel parse_model(std::istream& in) {
  LineReader reader(in);
  const std::string header = reader.require("header");
  const auto fields = split_fields(header, ' ');
  if (fields.size() != 6 || fields[0] != "FAM" || fields[1] != "v1")
    throw ParseError("expected header 'FAM v1 rows cols classes lambda'", reader.line());
  const auto rows = to_int(fields[2]), cols = to_int(fields[3]), classes = to_int(fields[4]);
  const auto lambda = to_real(fields[5]);
  if (!rows || !cols || !classes || !lambda || *rows <= 0 || *cols <= 0 || *classes < 2 ||
      *rows > 100'000'000 || *cols > 100'000'000 || *classes > 1'000'000 || *lambda < 0.0)
    throw ParseError("invalid header values", reader.line());

  StoredModel stored;
  stored.lambda = *lambda;

  // Peek at the next line to tell Gaussian models apart.
  const std::string second = reader.require("atom count or sigma_hat");
  const auto second_fields = split_fields(second, ' ');
  if (!second_fields.empty() && second_fields[0] == "sigma_hat") {
    GaussianModel g;
    g.rows = static_cast<int>(*rows);
    g.cols = static_cast<int>(*cols);
    g.classes = static_cast<int>(*classes);
    g.lambda = *lambda;
    const auto sigma = second_fields.size() == 2 ? to_real(second_fields[1]) : std::nullopt;
    if (!sigma || *sigma <= 0.0) throw ParseError("invalid sigma_hat", reader.line());
    g.sigma_hat = *sigma;
    const std::string levels_line = reader.require("levels");
    const auto lf = split_fields(levels_line, ' ');
    if (lf.size() != static_cast<std::size_t>(g.classes + 1) || lf[0] != "levels")
      throw ParseError("expected 'levels' followed by one value per class", reader.line());
    for (std::size_t j = 1; j < lf.size(); ++j) {
      const auto v = to_real(lf[j]);
      if (!v) throw ParseError("invalid level value", reader.line());
      if (!g.label_values.empty() && !(*v > g.label_values.back()))
        throw ParseError("levels must be strictly increasing", reader.line());
      g.label_values.push_back(*v);
    }
    g.atoms = read_atoms(reader, g.rows, g.cols, 1);
    expect_end(reader);
    stored.model = std::move(g);
    return stored;
  }

  AtomicModel model(static_cast<int>(*rows), static_cast<int>(*cols), static_cast<int>(*classes));
  // The line already consumed is the first class's atom count.
  for (int j = 0; j < model.parameter_classes(); ++j)
    model.per_class[j] = read_atoms(reader, model.rows, model.cols, j + 1,
                                    j == 0 ? std::optional<std::string>(second) : std::nullopt);
  expect_end(reader);
  stored.model = std::move(model);
  return stored;
}

StoredModel read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_model(in);
}

// --- truth -------------------------------------------------------------------

void write_truth(std::ostream& out, std::span<const Matrix> params) {
  if (params.empty()) throw InvalidArgument("need at least one parameter matrix");
  const auto rows = params[0].rows(), cols = params[0].cols();
  out << "FAMTRUTH v1 " << rows << ' ' << cols << ' ' << params.size() + 1 << '\n';
  for (const auto& m : params) {
    if (m.rows() != rows || m.cols() != cols) throw DimensionMismatch("parameter shapes differ");
    for (Eigen::Index k = 0; k < rows; ++k) {
      for (Eigen::Index l = 0; l < cols; ++l) out << (l ? " " : "") << real_text(m(k, l));
      out << '\n';
    }
  }
}

void write_truth(const std::filesystem::path& path, std::span<const Matrix> params) {
  std::ostringstream os;
  write_truth(os, params);
  write_file_atomic(path, os.str());
}

std::vector<Matrix> parse_truth(std::istream& in) {
  LineReader reader(in);
  const std::string header = reader.require("header");
  const auto fields = split_fields(header, ' ');
  if (fields.size() != 5 || fields[0] != "FAMTRUTH" || fields[1] != "v1")
    throw ParseError("expected header 'FAMTRUTH v1 rows cols classes'", reader.line());
  const auto rows = to_int(fields[2]), cols = to_int(fields[3]), classes = to_int(fields[4]);
  if (!rows || !cols || !classes || *rows <= 0 || *cols <= 0 || *classes < 2 ||
      *rows * *cols > 100'000'000)
    throw ParseError("invalid header values", reader.line());
  std::vector<Matrix> out;
  for (long long j = 0; j + 1 < *classes; ++j) {
    Matrix m(*rows, *cols);
    for (long long k = 0; k < *rows; ++k) {
      const auto row = parse_reals(reader, static_cast<std::size_t>(*cols),
                                   "row " + std::to_string(k + 1) + " of class " +
                                       std::to_string(j + 1));
      for (long long l = 0; l < *cols; ++l) m(k, l) = row[l];
    }
    out.push_back(std::move(m));
  }
  expect_end(reader);
  return out;
}

std::vector<Matrix> read_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_truth(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto out = open_out(tmp);
    out << contents;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace famc
