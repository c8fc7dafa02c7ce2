#include "stablesqf/io/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "stablesqf/io/dataset.hpp"

namespace stablesqf::io {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fixed(double x, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, digits);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

}  // namespace

void write_eval_csv(std::ostream& out, std::span<const EvalRow> rows) {
  out << "model,lambda,weight,sCRPS,sCRPS_c,sCRPS_t,sW1,sW1_c,sW1_t\n";
  for (const auto& r : rows) {
    const auto& e = r.report;
    out << r.model << ',' << format_number(r.lambda) << ',' << r.weight << ','
        << format_number(e.scrps) << ',' << format_number(e.scrps_c) << ','
        << format_number(e.scrps_t) << ',' << opt(e.sw1) << ',' << opt(e.sw1_c) << ','
        << opt(e.sw1_t) << '\n';
  }
}

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalRow> rows) {
  auto out = open_out(path);
  write_eval_csv(out, rows);
}

void write_traces_csv(std::ostream& out, std::span<const ForecastTrace> traces,
                      const QuantileGrid& grid) {
  out << "series_id,origin,horizon,level,quantile\n";
  for (const auto& tr : traces) {
    if (static_cast<std::size_t>(tr.quantiles.cols()) != grid.size()) {
      throw std::invalid_argument("trace does not match the quantile grid");
    }
    for (Eigen::Index i = 0; i < tr.quantiles.rows(); ++i) {
      for (Eigen::Index k = 0; k < tr.quantiles.cols(); ++k) {
        out << tr.series_id << ',' << tr.origin << ',' << i + 1 << ','
            << format_number(grid[static_cast<std::size_t>(k)]) << ','
            << format_number(tr.quantiles(i, k)) << '\n';
      }
    }
  }
}

void write_traces_csv(const std::filesystem::path& path, std::span<const ForecastTrace> traces,
                      const QuantileGrid& grid) {
  auto out = open_out(path);
  write_traces_csv(out, traces, grid);
}

namespace {

template <typename T>
T parse_field(std::string_view s, std::size_t line, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("line " + std::to_string(line) + ": malformed " + what);
  }
  return v;
}

}  // namespace

std::vector<ForecastTrace> read_traces_csv(std::istream& in, const QuantileGrid& grid) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("series_id,origin,horizon,level,quantile", 0) != 0) {
    throw std::runtime_error("line 1: expected header 'series_id,origin,horizon,level,quantile'");
  }
  using Cells = std::map<std::pair<std::size_t, std::size_t>, double>;  // (horizon, k)
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, Cells>> data;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != 5) throw std::runtime_error("line " + std::to_string(line_no) + ": expected 5 fields");
    const std::string id(f[0]);
    const auto origin = parse_field<std::size_t>(f[1], line_no, "origin");
    const auto horizon = parse_field<std::size_t>(f[2], line_no, "horizon");
    const auto level = parse_field<double>(f[3], line_no, "level");
    const auto q = parse_field<double>(f[4], line_no, "quantile");
    const auto levels = grid.levels();
    const auto it = std::find(levels.begin(), levels.end(), level);
    if (it == levels.end() || horizon < 1) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": level or horizon off the grid");
    }
    if (!data.count(id)) order.push_back(id);
    data[id][origin][{horizon - 1, static_cast<std::size_t>(it - levels.begin())}] = q;
  }

  std::vector<ForecastTrace> traces;
  for (const auto& id : order) {
    for (const auto& [origin, cells] : data.at(id)) {
      const std::size_t h = cells.rbegin()->first.first + 1;
      if (cells.size() != h * grid.size()) {
        throw std::runtime_error("trace " + id + "@" + std::to_string(origin) + " is incomplete");
      }
      nn::Matrix m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(grid.size()));
      for (const auto& [key, v] : cells) {
        m(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = v;
      }
      traces.push_back({id, origin, std::move(m)});
    }
  }
  return traces;
}

std::vector<ForecastTrace> read_traces_csv(const std::filesystem::path& path,
                                           const QuantileGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open traces " + path.string());
  return read_traces_csv(in, grid);
}

void write_forecast_metrics_csv(std::ostream& out, std::span<const newsvendor::ForecastMetricsRow> rows) {
  out << "forecaster,origin,crps,w1_adjacent,w1_nonadjacent\n";
  for (const auto& r : rows) {
    out << newsvendor::to_string(r.kind) << ",t-" << r.lag << ',' << format_number(r.crps) << ','
        << opt(r.w1_adjacent) << ',' << opt(r.w1_nonadjacent) << '\n';
  }
}

void write_profit_csv(std::ostream& out, std::span<const newsvendor::ProfitRow> rows) {
  out << "margin,strategy,profit_unstable,profit_stable,delta_pct,s_gt_u_pct\n";
  for (const auto& r : rows) {
    out << format_number(r.price) << ',' << newsvendor::to_string(r.strategy) << ','
        << format_number(r.result.profit_unstable) << ',' << format_number(r.result.profit_stable)
        << ',' << format_number(r.result.delta_pct) << ',' << format_number(r.result.s_gt_u_pct)
        << '\n';
  }
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five round-numbered ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) out.push_back(t);
  return out;
}

}  // namespace

std::string render_scatter_svg(std::span<const ScatterPoint> points, const std::string& x_label,
                               const std::string& y_label, const std::string& title) {
  constexpr double W = 640, H = 480, L = 80, R = 160, T = 50, B = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points[0].x;
    y0 = y1 = points[0].y;
    for (const auto& p : points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  auto pad = [](double& lo, double& hi) {
    const double d = hi > lo ? 0.08 * (hi - lo) : std::max(std::abs(lo) * 0.05, 1e-3);
    lo -= d;
    hi += d;
  };
  pad(x0, x1);
  pad(y0, y1);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::vector<std::string> groups;
  for (const auto& p : points) {
    if (std::find(groups.begin(), groups.end(), p.series) == groups.end()) groups.push_back(p.series);
  }
  auto color = [&](const std::string& g) {
    const auto idx = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), g) - groups.begin());
    return palette[idx % 6];
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (double t : ticks(x0, x1)) {
    s << "<line x1=\"" << fixed(px(t), 1) << "\" y1=\"" << H - B << "\" x2=\"" << fixed(px(t), 1)
      << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>"
      << "<text x=\"" << fixed(px(t), 1) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << format_number(std::round(t * 1e6) / 1e6) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    s << "<line x1=\"" << L - 5 << "\" y1=\"" << fixed(py(t), 1) << "\" x2=\"" << L << "\" y2=\""
      << fixed(py(t), 1) << "\" stroke=\"black\"/>"
      << "<text x=\"" << L - 8 << "\" y=\"" << fixed(py(t) + 4, 1) << "\" text-anchor=\"end\">"
      << format_number(std::round(t * 1e6) / 1e6) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  s << "<text transform=\"translate(20," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  for (const auto& g : groups) {
    std::string path;
    for (const auto& p : points) {
      if (p.series != g) continue;
      path += (path.empty() ? "M" : " L") + fixed(px(p.x), 1) + "," + fixed(py(p.y), 1);
    }
    s << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color(g) << "\" stroke-opacity=\"0.5\"/>\n";
  }
  for (const auto& p : points) {
    s << "<circle cx=\"" << fixed(px(p.x), 1) << "\" cy=\"" << fixed(py(p.y), 1) << "\" r=\"4\" fill=\""
      << color(p.series) << "\"/>";
    if (!p.label.empty()) {
      s << "<text x=\"" << fixed(px(p.x) + 6, 1) << "\" y=\"" << fixed(py(p.y) - 6, 1) << "\">"
        << escape(p.label) << "</text>";
    }
    s << '\n';
  }
  double ly = T + 10;
  for (const auto& g : groups) {
    s << "<circle cx=\"" << W - R + 20 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << color(g)
      << "\"/><text x=\"" << W - R + 30 << "\" y=\"" << ly + 4 << "\">" << escape(g) << "</text>\n";
    ly += 18;
  }
  s << "</svg>\n";
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace stablesqf::io
