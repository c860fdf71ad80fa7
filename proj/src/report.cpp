#include "gamelearn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gamelearn {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void write_positions(std::ostream& out, const std::vector<std::size_t>& positions, std::size_t L) {
  for (std::size_t p : positions) out << ',' << p % L << ',' << p / L;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

// Maps [0, 1] to a light-to-dark yellow/brown ramp.
std::string heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255 - 120 * t);
  const int g = static_cast<int>(250 - 190 * t);
  const int b = static_cast<int>(220 - 200 * t);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_run_csv(std::ostream& out, const RunRecord& record) {
  const std::size_t robots = record.initial_positions.size();
  out << "n,covered,potential,estimated,active,diagnostic";
  for (std::size_t i = 0; i < robots; ++i) out << ",x" << i << ",y" << i;
  out << '\n';
  out << "0," << format_double(record.initial_covered) << ",0,0,0,0";
  write_positions(out, record.initial_positions, record.side);
  out << '\n';
  for (const auto& r : record.rows) {
    out << r.n << ',' << format_double(r.covered) << ',' << format_double(r.potential) << ','
        << format_double(r.estimated) << ',' << r.active << ',' << format_double(r.diagnostic);
    write_positions(out, r.positions, record.side);
    out << '\n';
  }
}

void write_band_csv(std::ostream& out, const SweepResult& result) {
  out << "config,label,n,mean,low,high\n";
  for (std::size_t c = 0; c < result.bands.size(); ++c) {
    const auto& b = result.bands[c];
    for (std::size_t t = 0; t < b.mean.size(); ++t) {
      out << c << ',' << result.configs[c].label << ',' << t << ',' << format_double(b.mean[t]) << ','
          << format_double(b.low[t]) << ',' << format_double(b.high[t]) << '\n';
    }
  }
}

void write_sweep_summary_csv(std::ostream& out, const SweepResult& result) {
  out << "config,label,algorithm,seed,iterations,initial_covered,final_covered,total_mass,steady,error\n";
  for (const auto& cell : result.cells) {
    const auto& cfg = result.configs[cell.config_index];
    out << cell.config_index << ',' << cfg.label << ',' << to_string(cfg.algorithm) << ',' << cell.seed << ',';
    if (cell.record) {
      const auto& r = *cell.record;
      out << r.rows.size() << ',' << format_double(r.initial_covered) << ',' << format_double(r.final_covered())
          << ',' << format_double(r.total_mass) << ',' << (r.reached_steady_state ? 1 : 0) << ',';
    } else {
      out << ",,,,,";
    }
    std::string err = cell.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << err << '\n';
  }
}

void write_raster_csv(std::ostream& out, const WorthField& field) {
  out << "x,y,value\n";
  const std::size_t L = field.side();
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    out << c % L << ',' << c / L << ',' << format_double(field.value(c)) << '\n';
  }
}

std::string band_svg(const SweepResult& result, const std::string& title) {
  const double W = 720, H = 420, left = 70, right = 160, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  std::size_t len = 1;
  double ymax = 0.0;
  for (const auto& b : result.bands) {
    len = std::max(len, b.mean.size());
    for (double v : b.high) ymax = std::max(ymax, v);
  }
  if (ymax <= 0.0) ymax = 1.0;
  const double xs = len > 1 ? pw / static_cast<double>(len - 1) : pw;
  auto px = [&](std::size_t t) { return left + xs * static_cast<double>(t); };
  auto py = [&](double v) { return top + ph * (1.0 - v / ymax); };
  // Long runs are thinned to about 600 points per series.
  const std::size_t stride = std::max<std::size_t>(1, len / 600);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = ymax * k / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
      << short_double(v) << "</text>\n";
    const auto t = static_cast<std::size_t>(std::llround(static_cast<double>(len - 1) * k / 4.0));
    s << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 16 << "\" font-size=\"11\" text-anchor=\"middle\">" << t
      << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">covered worth</text>\n";

  for (std::size_t c = 0; c < result.bands.size(); ++c) {
    const auto& b = result.bands[c];
    if (b.mean.empty()) continue;
    std::ostringstream area, line;
    for (std::size_t t = 0; t < b.mean.size(); t += stride) area << px(t) << ',' << py(b.high[t]) << ' ';
    for (std::size_t t = b.mean.size(); t-- > 0;) {
      if (t % stride == 0) area << px(t) << ',' << py(b.low[t]) << ' ';
    }
    for (std::size_t t = 0; t < b.mean.size(); t += stride) line << px(t) << ',' << py(b.mean[t]) << ' ';
    s << "<polygon points=\"" << area.str() << "\" fill=\"" << colour(c) << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    s << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << colour(c) << "\" stroke-width=\"1.6\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(c);
    s << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\"" << colour(c)
      << "\"/>\n";
    s << "<text x=\"" << left + pw + 30 << "\" y=\"" << ly << "\" font-size=\"12\">"
      << escape(result.configs[c].label.empty() ? to_string(result.configs[c].algorithm) : result.configs[c].label)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string field_svg(const WorthField& field, const RunRecord* record, const std::string& title) {
  const std::size_t L = field.side();
  const double cell = std::max(6.0, 480.0 / static_cast<double>(std::max<std::size_t>(L, 1)));
  const double top = 36, left = 10;
  const double W = left * 2 + cell * static_cast<double>(L), H = top + 10 + cell * static_cast<double>(L);
  double fmax = 0.0;
  for (double v : field.raster()) fmax = std::max(fmax, v);
  if (fmax <= 0.0) fmax = 1.0;
  // Row y = 0 is drawn at the bottom.
  auto cx = [&](std::size_t c) { return left + cell * (static_cast<double>(c % L) + 0.5); };
  auto cy = [&](std::size_t c) { return top + cell * (static_cast<double>(L - 1 - c / L) + 0.5); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">" << escape(title) << "</text>\n";
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    s << "<rect x=\"" << cx(c) - cell / 2 << "\" y=\"" << cy(c) - cell / 2 << "\" width=\"" << cell << "\" height=\""
      << cell << "\" fill=\"" << heat(field.value(c) / fmax) << "\"/>\n";
  }
  if (record) {
    for (std::size_t i = 0; i < record->flags.size(); ++i) {
      for (std::size_t c : record->flags[i]) {
        s << "<circle cx=\"" << cx(c) << "\" cy=\"" << cy(c) << "\" r=\"" << cell * 0.15 << "\" fill=\"" << colour(i)
          << "\" fill-opacity=\"0.6\"/>\n";
      }
    }
    const auto& final_pos = record->rows.empty() ? record->initial_positions : record->rows.back().positions;
    for (std::size_t i = 0; i < final_pos.size(); ++i) {
      const std::size_t c = final_pos[i];
      s << "<circle cx=\"" << cx(c) << "\" cy=\"" << cy(c) << "\" r=\"" << cell * 0.42 << "\" fill=\"" << colour(i)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace gamelearn
