#include "fcomb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fcomb/metrics.hpp"

namespace fcomb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (is_absent(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream create(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  return out;
}

json nullable(double v) { return is_absent(v) ? json(nullptr) : json(v); }

std::string xml_escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b"};

// Reads a CSV written by this module: provenance comment, header, rows.
struct CsvFile {
  Provenance prov;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvFile read_output_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  CsvFile f;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, p.string() + ": empty file");
  f.prov = Provenance::parse_comment(line);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, p.string() + ": missing header");
  f.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) f.rows.push_back(split(line));
  return f;
}

double cell(const std::vector<std::string>& row, std::size_t k) {
  if (k >= row.size() || row[k].empty()) return kAbsent;
  return std::stod(row[k]);
}

std::size_t column_of(const CsvFile& f, const std::string& name, const fs::path& p) {
  const auto it = std::find(f.header.begin(), f.header.end(), name);
  if (it == f.header.end()) throw Error(ErrorCode::Parse, p.string() + ": missing column " + name);
  return static_cast<std::size_t>(it - f.header.begin());
}

Provenance summary_provenance(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  json j;
  try {
    j = json::parse(in);
    return {j.at("config_hash").get<std::string>(), j.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, p.string() + ": " + e.what());
  }
}

void require_match(const Provenance& expect, const CsvFile& f, const fs::path& p) {
  if (!(f.prov == expect))
    throw validation_error(p.string() + " was produced by config " + f.prov.config_hash + " seed " +
                           std::to_string(f.prov.seed) + ", summary says " + expect.config_hash + " seed " +
                           std::to_string(expect.seed));
}

}  // namespace

std::string Provenance::comment() const { return "# config_hash=" + config_hash + " seed=" + std::to_string(seed); }

Provenance Provenance::parse_comment(const std::string& line) {
  char hash[64] = {0};
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "# config_hash=%63s seed=%llu", hash, &seed) != 2)
    throw Error(ErrorCode::Parse, "missing provenance line (config_hash/seed)");
  return {hash, static_cast<std::uint64_t>(seed)};
}

void write_trial_csvs(const eval::TrialResult& r, const fs::path& dir, const Provenance& prov) {
  {
    auto out = create(dir / "epochs.csv");
    out << prov.comment() << '\n' << "epoch,truth,naive,implied,network\n";
    for (const auto& e : r.epochs)
      out << e.epoch << ',' << fmt(e.truth) << ',' << fmt(e.naive) << ',' << fmt(e.implied) << ','
          << fmt(e.network) << '\n';
  }
  auto out = create(dir / "workers.csv");
  out << prov.comment() << '\n' << "epoch,worker_id,inference,true_target,forecast,weight\n";
  for (const auto& e : r.epochs) {
    for (std::size_t j = 0; j < r.workers.size(); ++j) {
      const double inf = e.inference.empty() ? kAbsent : e.inference[j];
      const double fc = e.forecast.empty() ? kAbsent : e.forecast[j];
      const double w = e.weights.empty() ? kAbsent : e.weights[j];
      if (is_absent(inf) && is_absent(e.true_target[j])) continue;
      out << e.epoch << ',' << r.workers[j].id << ',' << fmt(inf) << ',' << fmt(e.true_target[j]) << ','
          << fmt(fc) << ',' << fmt(w) << '\n';
    }
  }
}

json trial_summary(const eval::TrialResult& r, const Provenance& prov, const json& config) {
  json workers = json::array();
  for (std::size_t j = 0; j < r.workers.size(); ++j) {
    json w{{"id", r.workers[j].id}, {"forecast_rmse", nullable(r.worker_rmse[j])}};
    if (j < r.diagnostics.size()) {
      const auto& d = r.diagnostics[j];
      w["median_true"] = nullable(d.median_true);
      w["median_pred"] = nullable(d.median_pred);
      if (d.fit) {
        w["huber"] = {{"slope", d.fit->slope},
                      {"intercept", d.fit->intercept},
                      {"slope_lo", nullable(d.fit->slope_lo)},
                      {"slope_hi", nullable(d.fit->slope_hi)},
                      {"positive_1sigma", d.positive}};
      }
    }
    workers.push_back(std::move(w));
  }
  return {{"config_hash", prov.config_hash},
          {"seed", prov.seed},
          {"config", config},
          {"implied_log_loss", nullable(r.implied_log_loss)},
          {"naive_log_loss", nullable(r.naive_log_loss)},
          {"network_log_loss", nullable(r.network_log_loss)},
          {"degenerate_epochs", r.degenerate_epochs},
          {"lags", r.lags},
          {"n_features", r.feature_names.size()},
          {"workers", std::move(workers)}};
}

void write_repeats_csv(const std::vector<eval::TrialResult>& runs, const fs::path& path, const Provenance& prov) {
  auto out = create(path);
  out << prov.comment() << '\n' << "trial,seed,implied_log_loss,naive_log_loss,network_log_loss\n";
  for (std::size_t k = 0; k < runs.size(); ++k)
    out << k << ',' << runs[k].seed << ',' << fmt(runs[k].implied_log_loss) << ',' << fmt(runs[k].naive_log_loss)
        << ',' << fmt(runs[k].network_log_loss) << '\n';
}

void write_sweep(const eval::SweepTable& t, const fs::path& dir, const Provenance& prov, const json& config) {
  {
    auto out = create(dir / "sweep.csv");
    out << prov.comment() << '\n';
    t.write_csv(out);
  }
  json j = t.summary_json();
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j["config"] = config;
  write_json(j, dir / "sweep.json");
}

void write_json(const json& j, const fs::path& path) {
  auto out = create(path);
  out << j.dump(2) << '\n';
}

std::string render_line_svg(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                            const std::vector<std::string>& labels, const std::string& title) {
  const double W = 900, H = 420, L = 70, R = 150, T = 40, B = 50;
  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& s : series)
    for (double v : s)
      if (is_present(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) {
    ymin = std::isfinite(ymin) ? ymin - 1 : 0;
    ymax = ymin + 2;
  }
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0, xv = xmin + (xmax - xmin) * k / 4.0;
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(yv) << "</text>\n"
      << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << num(xv) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < x.size() && i < series[s].size(); ++i)
      if (is_present(series[s][i])) pts += num(px(x[i])) + "," + num(py(series[s][i])) + " ";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s == 1 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << pts << "\"/>\n";
    const double ly = T + 20.0 * static_cast<double>(s);
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
      << xml_escape(s < labels.size() ? labels[s] : "") << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_violin_svg(const std::vector<ViolinGroup>& groups, const std::string& title) {
  const double slot = 46, L = 70, T = 40, B = 150, H = 520;
  const double W = L + slot * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 20;
  double ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (const auto& g : groups)
    for (double v : g.values)
      if (is_present(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (!(ymax > ymin)) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(yv) << "</text>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double> v;
    for (double x : groups[g].values)
      if (is_present(x)) v.push_back(x);
    const double cx = L + slot * (static_cast<double>(g) + 0.5);
    const char* color = kPalette[g % std::size(kPalette)];
    if (v.size() >= 2) {
      // Gaussian kernel density, Silverman bandwidth, mirrored about cx.
      double mean = 0, var = 0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = std::sqrt(var / static_cast<double>(v.size() - 1));
      const double h = std::max(1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2), 1e-3 * (ymax - ymin));
      const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
      const double lo = *lo_it - 2 * h, hi = *hi_it + 2 * h;
      constexpr int kSteps = 60;
      std::vector<double> ys(kSteps + 1), dens(kSteps + 1);
      double peak = 0;
      for (int k = 0; k <= kSteps; ++k) {
        ys[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / kSteps;
        double d = 0;
        for (double x : v) {
          const double u = (ys[static_cast<std::size_t>(k)] - x) / h;
          d += std::exp(-0.5 * u * u);
        }
        dens[static_cast<std::size_t>(k)] = d;
        peak = std::max(peak, d);
      }
      std::string left, right;
      for (int k = 0; k <= kSteps; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double half = 0.45 * slot * dens[kk] / peak;
        left += num(cx - half) + "," + num(py(ys[kk])) + " ";
        right = num(cx + half) + "," + num(py(ys[kk])) + " " + right;
      }
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.5\" stroke=\"" << color << "\" points=\""
        << left << right << "\"/>\n";
    }
    if (!v.empty()) {
      const double med = eval::median(v);
      o << "<line x1=\"" << num(cx - 0.3 * slot) << "\" y1=\"" << num(py(med)) << "\" x2=\"" << num(cx + 0.3 * slot)
        << "\" y2=\"" << num(py(med)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    o << "<text transform=\"translate(" << num(cx) << "," << H - B + 10 << ") rotate(60)\" font-size=\"10\">"
      << xml_escape(groups[g].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  auto out = create(p);
  out << text;
}

}  // namespace

std::vector<fs::path> render_report(const fs::path& input, const fs::path& out) {
  std::vector<fs::path> written;
  const bool trial = fs::exists(input / "summary.json");
  const bool sweep = fs::exists(input / "sweep.json");
  if (!trial && !sweep) throw validation_error(input.string() + " holds neither summary.json nor sweep.json");

  if (trial) {
    const Provenance prov = summary_provenance(input / "summary.json");
    const fs::path ep = input / "epochs.csv";
    const CsvFile f = read_output_csv(ep);
    require_match(prov, f, ep);
    if (fs::exists(input / "workers.csv")) require_match(prov, read_output_csv(input / "workers.csv"), input / "workers.csv");
    if (fs::exists(input / "repeats.csv")) require_match(prov, read_output_csv(input / "repeats.csv"), input / "repeats.csv");
    const std::size_t ce = column_of(f, "epoch", ep), ct = column_of(f, "truth", ep), cn = column_of(f, "naive", ep),
                      ci = column_of(f, "implied", ep);
    std::vector<double> x;
    std::vector<std::vector<double>> ys(3);
    for (const auto& row : f.rows) {
      x.push_back(cell(row, ce));
      ys[0].push_back(cell(row, ct));
      ys[1].push_back(cell(row, cn));
      ys[2].push_back(cell(row, ci));
    }
    const fs::path target = out / "inference.svg";
    write_text(target, render_line_svg(x, ys, {"truth", "naive", "implied"},
                                       "Test window (config " + prov.config_hash + ", seed " + std::to_string(prov.seed) + ")"));
    written.push_back(target);
  }

  if (sweep) {
    const Provenance prov = summary_provenance(input / "sweep.json");
    const fs::path sp = input / "sweep.csv";
    const CsvFile f = read_output_csv(sp);
    require_match(prov, f, sp);
    const std::size_t ct = column_of(f, "target", sp), cs = column_of(f, "structure", sp),
                      cp = column_of(f, "spans", sp), cn = column_of(f, "n_train", sp),
                      cl = column_of(f, "mean_log_loss", sp);
    std::vector<ViolinGroup> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& row : f.rows) {
      const std::string key = row.at(ct) + " " + row.at(cs) + " [" + row.at(cp) + "] n=" + row.at(cn);
      auto [it, fresh] = index.emplace(key, groups.size());
      if (fresh) groups.push_back({key, {}});
      groups[it->second].values.push_back(cell(row, cl));
    }
    const fs::path target = out / "sweep_violin.svg";
    write_text(target, render_violin_svg(groups, "Implied mean log loss per cell (config " + prov.config_hash + ")"));
    written.push_back(target);
  }
  return written;
}

}  // namespace fcomb::cli
