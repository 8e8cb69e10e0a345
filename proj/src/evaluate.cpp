#include "stressnet/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "stressnet/errors.hpp"

namespace stressnet {

std::string model_slug(const std::string& model) {
  std::string out;
  for (char c : model) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

RolloutResult ha_rollout(const HistoricalAverage& ha, const PreparedSim& sim, Channel channel,
                         const NormalizationStats& stats, std::size_t dt) {
  const auto& raw = sim.stress(channel);
  const std::size_t n = window_count(raw.size(), dt);
  if (ha.mean.size() != raw.size()) throw DataError(sim.name + ": historical average covers a different horizon");
  RolloutResult r;
  r.sim = sim.name;
  r.delta_t = dt;
  for (std::size_t j = 0; j < n; ++j) r.pred_norm.push_back(ha.predict(dt + j));
  score_rollout(r, raw, stats);
  return r;
}

ResultRow summarize(const std::string& model, Channel channel, std::span<const RolloutResult> results) {
  if (results.empty()) throw DataError("no rollouts to summarize for " + model);
  ResultRow row{model, channel, 0.0, 0.0, results.size()};
  for (const auto& r : results) {
    row.mape += r.mape;
    row.mape_normalized += r.mape_normalized;
  }
  row.mape /= static_cast<double>(results.size());
  row.mape_normalized /= static_cast<double>(results.size());
  return row;
}

void ResultsTable::add(const ResultRow& row) {
  if (find(row.model, row.channel))
    throw DomainError("results already hold " + row.model + " / " + to_string(row.channel));
  rows_.push_back(row);
}

const ResultRow* ResultsTable::find(const std::string& model, Channel channel) const {
  for (const auto& r : rows_)
    if (r.model == model && r.channel == channel) return &r;
  return nullptr;
}

namespace {

std::vector<std::string> ordered_models(const std::vector<ResultRow>& rows) {
  std::vector<std::string> models;
  for (const auto& m : kModelOrder)
    for (const auto& r : rows)
      if (r.model == m) {
        models.push_back(m);
        break;
      }
  for (const auto& r : rows)
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  return models;
}

}  // namespace

std::string ResultsTable::to_text() const {
  const auto models = ordered_models(rows_);
  std::size_t w = 6;
  for (const auto& m : models) w = std::max(w, m.size());
  auto cell = [&](const std::string& m, Channel c) -> std::string {
    const ResultRow* r = find(m, c);
    if (!r) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f (%.4f)", r->mape, r->mape_normalized);
    return buf;
  };
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %-20s  %-20s\n", static_cast<int>(w), "Models", "Channel xx", "Channel yy");
  out << line << std::string(w + 44, '-') << '\n';
  for (const auto& m : models) {
    std::snprintf(line, sizeof line, "%-*s  %-20s  %-20s\n", static_cast<int>(w), m.c_str(),
                  cell(m, Channel::xx).c_str(), cell(m, Channel::yy).c_str());
    out << line;
  }
  out << "MAPE on raw stress; normalized-scale MAPE in brackets.\n";
  return out.str();
}

void ResultsTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "model,channel,mape\n";
  char buf[64];
  for (const auto& m : ordered_models(rows_))
    for (Channel c : {Channel::xx, Channel::yy})
      if (const ResultRow* r = find(m, c)) {
        std::snprintf(buf, sizeof buf, "%.17g", r->mape);
        out << m << ',' << to_string(c) << ',' << buf << '\n';
      }
}

void write_rollout_csv(const std::filesystem::path& path, const RolloutResult& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,truth,pred\n";
  char buf[96];
  for (std::size_t j = 0; j < r.pred.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.delta_t + j, r.truth[j], r.pred[j]);
    out << buf;
  }
}

RolloutCsv read_rollout_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,truth,pred") throw DataError(path.string() + ": bad header");
  RolloutCsv r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const unsigned long t = std::strtoul(line.c_str(), &end, 10);
    if (*end != ',') throw DataError(path.string() + ": bad row '" + line + "'");
    const double truth = std::strtod(end + 1, &end);
    if (*end != ',') throw DataError(path.string() + ": bad row '" + line + "'");
    const double pred = std::strtod(end + 1, &end);
    if (*end != '\0') throw DataError(path.string() + ": bad row '" + line + "'");
    r.t.push_back(t);
    r.truth.push_back(truth);
    r.pred.push_back(pred);
  }
  return r;
}

namespace {

constexpr double kWidth = 900, kHeight = 480;
constexpr double kLeft = 90, kRight = 200, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_plot(const std::string& title, std::size_t first_step, std::span<const double> truth,
                        std::span<const PlotSeries> series) {
  if (truth.empty()) throw ShapeError("plot needs a non-empty truth series");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto extend = [&](std::span<const double> v) {
    for (double x : v)
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  };
  extend(truth);
  for (const auto& s : series) {
    if (s.values.size() != truth.size())
      throw ShapeError("series '" + s.label + "' has " + std::to_string(s.values.size()) + " points, truth has " +
                       std::to_string(truth.size()));
    extend(s.values);
  }
  if (!std::isfinite(lo)) throw DomainError("plot has no finite values");
  if (!(hi > lo)) hi = lo + 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const std::size_t n = truth.size();
  const double x0 = static_cast<double>(first_step), x1 = static_cast<double>(first_step + n - 1);
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
  auto py = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::ostringstream o;
  char buf[256];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<g id=\"axes\" data-xmin=\"%.17g\" data-xmax=\"%.17g\" data-ymin=\"%.17g\" data-ymax=\"%.17g\" "
                "stroke=\"black\">\n",
                x0, x1, lo, hi);
  o << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", kLeft, kTop + ph, kLeft + pw,
                kTop + ph);
  o << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", kLeft, kTop, kLeft, kTop + ph);
  o << buf << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%.3g</text>\n", kLeft - 6, py(v) + 4,
                  v);
    o << buf;
    const double s = x0 + (x1 - x0) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%.0f</text>\n",
                  kLeft + pw * k / 4.0, kTop + ph + 18, s);
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">time step</text>\n", kLeft + pw / 2,
                kHeight - 14);
  o << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"18\" y=\"%g\" transform=\"rotate(-90 18 %g)\" text-anchor=\"middle\">stress (Pa)</text>\n",
                kTop + ph / 2, kTop + ph / 2);
  o << buf << "</g>\n";

  auto polyline = [&](std::span<const double> v, const char* color, const std::string& label, std::size_t slot) {
    o << "<polyline data-label=\"" << xml_escape(label) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) continue;
      std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", first ? "" : " ", px(i), py(v[i]));
      o << buf;
      first = false;
    }
    o << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(slot);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">",
                  kLeft + pw + 15, ly, kLeft + pw + 40, ly, color, kLeft + pw + 46, ly + 4);
    o << buf << xml_escape(label) << "</text>\n";
  };
  o << "<g id=\"legend-and-data\">\n";
  polyline(truth, "black", "Ground truth", 0);
  for (std::size_t i = 0; i < series.size(); ++i)
    polyline(series[i].values, kColors[i % std::size(kColors)], series[i].label, i + 1);
  o << "</g>\n</svg>\n";
  return o.str();
}

void write_plot(const std::filesystem::path& path, const std::string& title, std::size_t first_step,
                std::span<const double> truth, std::span<const PlotSeries> series) {
  const std::string svg = render_plot(title, first_step, truth, series);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << svg;
}

}  // namespace stressnet
