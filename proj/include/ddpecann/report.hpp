#pragma once
// Run artifacts: report.csv, fields.csv, summary.txt, resolved config, and
// the side-by-side comparison of two reports.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ddpecann/config.hpp"
#include "ddpecann/ddm.hpp"
#include "ddpecann/errors.hpp"
#include "ddpecann/metrics.hpp"

namespace ddpecann {

inline const char* kReportHeader =
    "iteration,subdomain,J,boundary_C,interface_C,measurement_C,alpha,rel_l2,max_err";
inline const char* kFieldsHeader = "x,y,subdomain,u_exact,u_pred,abs_err";

/// Shortest round-trip scientific notation, independent of the C locale.
inline std::string sci(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  return std::string(buf, ptr);
}

inline std::string report_rows(const IterationRecord& rec) {
  std::string out;
  for (const auto& s : rec.subdomains) {
    out += std::to_string(rec.iteration) + ',' + std::to_string(s.subdomain) + ',' +
           sci(s.loss.objective) + ',' + sci(s.loss.boundary) + ',' + sci(s.loss.interface) + ',' +
           sci(s.loss.measurement) + ',' + sci(s.robin) + ',' + sci(s.rel_l2) + ',' +
           sci(s.max_abs) + '\n';
  }
  return out;
}

/// Appends iteration rows to report.csv as they arrive, so a diverging run
/// still leaves its partial history on disk.
class ReportWriter {
 public:
  explicit ReportWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw FormatError("cannot write " + path.string());
    out_ << kReportHeader << '\n';
    out_.flush();
  }

  void operator()(const IterationRecord& rec) {
    out_ << report_rows(rec);
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline void write_fields(const std::filesystem::path& path, std::span<const FieldSamples> fields) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << kFieldsHeader << '\n';
  for (const auto& f : fields) {
    for (Eigen::Index j = 0; j < f.points.cols(); ++j) {
      out << sci(f.points(0, j)) << ',' << sci(f.points(1, j)) << ',' << f.subdomain << ','
          << sci(f.exact(j)) << ',' << sci(f.predicted(j)) << ','
          << sci(std::abs(f.exact(j) - f.predicted(j))) << '\n';
    }
  }
}

inline std::string summary_text(const RunConfig& c, const ErrorReport& err, const RunResult& r) {
  std::ostringstream o;
  o << "problem: " << c.problem << "\n"
    << "robin mode: "
    << (c.robin_mode == RobinMode::adaptive   ? "adaptive"
        : c.robin_mode == RobinMode::constant ? "constant"
                                              : "closed_form")
    << "\n"
    << "subdomains: " << r.models.size() << ", outer iterations: " << r.history.size()
    << ", epochs per iteration: " << c.epochs << ", exchanges: " << r.exchanges << "\n"
    << "maximum E_r across subdomains: " << sci(err.max_rel_l2) << "\n"
    << "maximum E_inf across subdomains: " << sci(err.max_abs) << "\n";
  for (std::size_t k = 0; k < err.per_subdomain.size(); ++k)
    o << "subdomain " << k << ": E_r = " << sci(err.per_subdomain[k].rel_l2)
      << ", E_inf = " << sci(err.per_subdomain[k].max_abs) << ", alpha = " << r.models[k].robin << "\n";
  o << "wall time [s]: " << r.wall_seconds << "\n";
  return o.str();
}

/// Writes fields.csv, summary.txt and config.ini for a finished run.
inline ErrorReport write_artifacts(const std::filesystem::path& dir, const RunConfig& c,
                                   const RunResult& r) {
  const auto fields = sample_fields(r.setup.partition, r.setup.problem.exact,
                                    model_predictor(r.models), c.grid);
  ErrorReport err = errors_from_fields(fields);
  for (const auto& m : r.models) err.robin.push_back(m.robin);
  err.wall_seconds = r.wall_seconds;
  write_fields(dir / "fields.csv", fields);
  std::ofstream(dir / "summary.txt") << summary_text(c, err, r);
  return err;
}

// --- CSV reading and comparison ----------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw FormatError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
  return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size())
      throw FormatError(path.string() + ": row " + std::to_string(t.rows.size()) +
                        " has the wrong number of cells");
  }
  return t;
}

/// Final-iteration maxima of one report.
struct ReportSummary {
  std::string name;
  int iteration = 0;
  double max_rel_l2 = 0.0;
  double max_abs = 0.0;
  std::vector<double> alpha;
};

inline ReportSummary summarize_report(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::string src = path.string();
  const auto ci = t.column("iteration", src), cr = t.column("rel_l2", src),
             cm = t.column("max_err", src), ca = t.column("alpha", src);
  t.column("subdomain", src);
  if (t.rows.empty()) throw FormatError(src + ": no data rows");
  ReportSummary s;
  s.name = src;
  auto num = [&](const std::string& text) {
    try {
      return std::stod(text);
    } catch (const std::exception&) {
      throw FormatError(src + ": invalid number '" + text + "'");
    }
  };
  for (const auto& row : t.rows) s.iteration = std::max(s.iteration, static_cast<int>(num(row[ci])));
  for (const auto& row : t.rows) {
    if (static_cast<int>(num(row[ci])) != s.iteration) continue;
    s.max_rel_l2 = std::max(s.max_rel_l2, num(row[cr]));
    s.max_abs = std::max(s.max_abs, num(row[cm]));
    s.alpha.push_back(num(row[ca]));
  }
  return s;
}

struct Table1Comparison {
  ReportSummary a, b;
  int winner = 0;  // 0 tie, 1 first report, 2 second report
  double tolerance = 0.0;
  bool a_passes = false;
  bool b_passes = false;
};

inline Table1Comparison compare_summaries(ReportSummary a, ReportSummary b, double tolerance) {
  Table1Comparison c{std::move(a), std::move(b), 0, tolerance, false, false};
  if (c.a.max_rel_l2 < c.b.max_rel_l2)
    c.winner = 1;
  else if (c.b.max_rel_l2 < c.a.max_rel_l2)
    c.winner = 2;
  c.a_passes = c.a.max_rel_l2 <= tolerance;
  c.b_passes = c.b.max_rel_l2 <= tolerance;
  return c;
}

inline Table1Comparison compare_table1(const std::filesystem::path& a, const std::filesystem::path& b,
                                       double tolerance) {
  return compare_summaries(summarize_report(a), summarize_report(b), tolerance);
}

inline std::string format_comparison(const Table1Comparison& c) {
  std::ostringstream o;
  auto line = [&](const ReportSummary& s, bool winner, bool pass) {
    o << (winner ? "* " : "  ") << s.name << "  max E_r = " << sci(s.max_rel_l2)
      << "  max E_inf = " << sci(s.max_abs) << "  [" << (pass ? "PASS" : "FAIL") << " <= "
      << sci(c.tolerance) << "]\n";
  };
  o << "report (final iteration)  maximum E_r across subdomains  maximum E_inf across subdomains\n";
  line(c.a, c.winner == 1, c.a_passes);
  line(c.b, c.winner == 2, c.b_passes);
  o << (c.winner == 0 ? "tie: no winner\n"
                      : "winner: " + (c.winner == 1 ? c.a.name : c.b.name) + "\n");
  return o.str();
}

}  // namespace ddpecann
