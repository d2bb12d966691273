#include "waveband/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace waveband::io {

namespace {

std::map<std::string, std::string> parse_header(const std::string& line) {
  if (line.empty() || line[0] != '#') throw Error(ErrorKind::io, "missing header line");
  std::map<std::string, std::string> kv;
  std::istringstream in(line.substr(1));
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return kv;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  while (first < s.data() + s.size() && (*first == ' ' || *first == '\t')) ++first;
  const char* last = s.data() + s.size();
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw Error(ErrorKind::io, "bad number '" + s + "'");
  return v;
}

std::vector<double> split_row(const std::string& line) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(to_double(item));
  return out;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorKind::io, "header is missing '" + key + "'");
  return it->second;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void save_potential(const HermitianPotential& q, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "# n=" << q.n() << " h=" << format_double(q.h()) << " Xmax=" << format_double(q.extent())
      << "\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    out << format_double(q.origin() + double(i) * q.h());
    for (int r = 0; r < q.n(); ++r)
      for (int c = 0; c < q.n(); ++c)
        out << ',' << format_double(q[i](r, c).real()) << ',' << format_double(q[i](r, c).imag());
    out << '\n';
  }
}

HermitianPotential load_potential(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  const auto kv = parse_header(line);
  const int n = std::stoi(require(kv, "n"));
  const double h = to_double(require(kv, "h"));
  if (n < 1 || !(h > 0.0)) throw Error(ErrorKind::io, "bad potential header");
  std::vector<Mat> samples;
  double origin = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto row = split_row(line);
    if (int(row.size()) != 1 + 2 * n * n) throw Error(ErrorKind::io, "potential row has wrong width");
    if (samples.empty()) origin = row[0];
    Mat q(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) q(r, c) = cplx(row[1 + 2 * (r * n + c)], row[2 + 2 * (r * n + c)]);
    samples.push_back(std::move(q));
  }
  try {
    return HermitianPotential(std::move(samples), h, origin, HermitianPotential::Source::file,
                              path.string());
  } catch (const Error& e) {
    throw Error(ErrorKind::io, std::string("invalid potential file: ") + e.what());
  }
}

void save_operator(const DiscreteOperator& op, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "# role=" << to_string(op.role) << " N=" << op.col_slots() << " n=" << op.n
      << " h=" << format_double(op.h);
  if (op.matrix.rows() != op.matrix.cols()) out << " rows=" << op.row_slots();
  out << "\n";
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
      if (c) out << ',';
      out << format_double(op.matrix(r, c).real()) << ',' << format_double(op.matrix(r, c).imag());
    }
    out << '\n';
  }
}

DiscreteOperator load_operator(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  const auto kv = parse_header(line);
  DiscreteOperator op;
  op.role = role_from_string(require(kv, "role"));
  const int N = std::stoi(require(kv, "N"));
  op.n = std::stoi(require(kv, "n"));
  op.h = to_double(require(kv, "h"));
  const int rows = kv.count("rows") ? std::stoi(kv.at("rows")) : N;
  if (N < 1 || op.n < 1 || rows < 1 || !(op.h > 0.0)) throw Error(ErrorKind::io, "bad operator header");
  op.matrix.resize(Eigen::Index(rows) * op.n, Eigen::Index(N) * op.n);
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (r >= op.matrix.rows()) throw Error(ErrorKind::io, "operator file has too many rows");
    const auto row = split_row(line);
    if (Eigen::Index(row.size()) != 2 * op.matrix.cols())
      throw Error(ErrorKind::io, "operator row has wrong width");
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) op.matrix(r, c) = cplx(row[2 * c], row[2 * c + 1]);
    ++r;
  }
  if (r != op.matrix.rows()) throw Error(ErrorKind::io, "operator file has too few rows");
  return op;
}

void save_wave_field(const WaveField& u, const std::filesystem::path& path,
                     std::optional<int> slice) {
  std::ofstream out = open_out(path);
  const int n = u.grid.n;
  out << "# x,t";
  for (int a = 0; a < n; ++a) out << ",re" << a << ",im" << a;
  out << "\n";
  const int first = slice.value_or(0);
  const int last = slice.value_or(int(u.values.rows()) - 1);
  if (first < 0 || last >= u.values.rows()) throw Error(ErrorKind::grid, "time slice out of range");
  const Eigen::Index points = u.values.cols() / n;
  for (int j = first; j <= last; ++j)
    for (Eigen::Index i = 0; i < points; ++i) {
      out << format_double(double(i) * u.grid.h) << ',' << format_double(j * u.grid.h);
      for (int a = 0; a < n; ++a) {
        const cplx v = u.values(j, i * n + a);
        out << ',' << format_double(v.real()) << ',' << format_double(v.imag());
      }
      out << '\n';
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace waveband::io
