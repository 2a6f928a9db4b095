#include "fcomb/replay.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <vector>

namespace fcomb::cli {

namespace {

Error parse_error(const std::string& src, std::size_t line, const std::string& msg) {
  return Error(ErrorCode::Parse, src + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Reads a CSV whose header must equal `columns`, optionally followed by a
// `timestamp` passthrough column. Calls `row(fields, line_no)` per data line.
template <typename F>
void read_csv(std::istream& in, const std::string& src, const std::vector<std::string>& columns, F&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t width = columns.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line);
    if (!have_header) {
      std::vector<std::string> with_ts = columns;
      with_ts.push_back("timestamp");
      if (fields == with_ts) width = with_ts.size();
      else if (fields != columns) {
        std::string expected;
        for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
        throw parse_error(src, line_no, "expected header '" + expected + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != width)
      throw parse_error(src, line_no, "expected " + std::to_string(width) + " fields, got " +
                                          std::to_string(fields.size()));
    row(fields, line_no);
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failure on " + src);
  if (!have_header) throw parse_error(src, line_no, "missing header");
}

int parse_int(const std::string& s, const std::string& src, std::size_t line, const char* what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw parse_error(src, line, std::string("bad ") + what + " '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& src, std::size_t line, const char* what,
                    bool allow_empty = false) {
  if (s.empty()) {
    if (allow_empty) return kAbsent;
    throw parse_error(src, line, std::string("empty ") + what);
  }
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw parse_error(src, line, std::string("bad ") + what + " '" + s + "'");
  return v;
}

std::string check_worker(const std::string& s, const std::string& src, std::size_t line) {
  if (s.empty()) throw parse_error(src, line, "empty worker_id");
  if (s.find('"') != std::string::npos) throw parse_error(src, line, "quoted worker_id not supported");
  return s;
}

std::ifstream open(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  return in;
}

std::string fmt(double v) {
  if (is_absent(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

InferenceTable parse_replay(std::istream& inferences, std::istream& truth, const std::string& inf_name,
                            const std::string& truth_name) {
  struct Row {
    int epoch;
    std::string worker;
    double value;
  };
  std::vector<Row> rows;
  std::set<std::pair<int, std::string>> seen;
  read_csv(inferences, inf_name, {"epoch", "worker_id", "inference"},
           [&](const std::vector<std::string>& f, std::size_t ln) {
             Row r{parse_int(f[0], inf_name, ln, "epoch"), check_worker(f[1], inf_name, ln),
                   parse_double(f[2], inf_name, ln, "inference")};
             if (!rows.empty() && r.epoch < rows.back().epoch)
               throw parse_error(inf_name, ln, "epochs must not decrease");
             if (!seen.insert({r.epoch, r.worker}).second)
               throw parse_error(inf_name, ln, "duplicate row for epoch " + std::to_string(r.epoch) + ", worker " +
                                                   r.worker);
             rows.push_back(std::move(r));
           });

  std::map<int, double> truth_of;
  int last = 0;
  read_csv(truth, truth_name, {"epoch", "truth"}, [&](const std::vector<std::string>& f, std::size_t ln) {
    const int e = parse_int(f[0], truth_name, ln, "epoch");
    if (!truth_of.empty() && e <= last) throw parse_error(truth_name, ln, "epochs must be strictly increasing");
    truth_of[e] = parse_double(f[1], truth_name, ln, "truth");
    last = e;
  });

  InferenceTable t;
  std::map<std::string, std::size_t> worker_index;
  for (const auto& r : rows) {
    if (!worker_index.count(r.worker)) {
      worker_index[r.worker] = t.workers.size();
      t.workers.push_back({r.worker, WorkerKind::Inferer});
    }
    if (t.epochs.empty() || t.epochs.back() != r.epoch) {
      const auto it = truth_of.find(r.epoch);
      if (it == truth_of.end()) throw validation_error("missing truth for epoch " + std::to_string(r.epoch));
      t.epochs.push_back(r.epoch);
      t.truth.push_back(it->second);
    }
  }
  if (t.epochs.empty()) throw validation_error(inf_name + ": no inference rows");
  t.inference = Matrix(t.epochs.size(), t.workers.size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    while (t.epochs[i] != r.epoch) ++i;
    t.inference(i, worker_index[r.worker]) = r.value;
  }
  return t;
}

MarketSeries parse_market(std::istream& in, const std::string& name) {
  MarketSeries m;
  read_csv(in, name, {"epoch", "open", "high", "low", "close", "volume"},
           [&](const std::vector<std::string>& f, std::size_t ln) {
             const int e = parse_int(f[0], name, ln, "epoch");
             if (!m.epochs.empty() && e <= m.epochs.back())
               throw parse_error(name, ln, "epochs must be strictly increasing");
             m.epochs.push_back(e);
             m.open.push_back(parse_double(f[1], name, ln, "open", true));
             m.high.push_back(parse_double(f[2], name, ln, "high", true));
             m.low.push_back(parse_double(f[3], name, ln, "low", true));
             m.close.push_back(parse_double(f[4], name, ln, "close"));
             m.volume.push_back(parse_double(f[5], name, ln, "volume", true));
           });
  m.validate();
  return m;
}

features::WorkerSideColumns parse_rewards(std::istream& in, const InferenceTable& table, const std::string& name) {
  std::map<int, std::size_t> epoch_index;
  for (std::size_t i = 0; i < table.epochs.size(); ++i) epoch_index[table.epochs[i]] = i;
  std::map<std::string, std::size_t> worker_index;
  for (std::size_t j = 0; j < table.workers.size(); ++j) worker_index[table.workers[j].id] = j;

  Matrix reward(table.n_epochs(), table.workers.size());
  Matrix score(table.n_epochs(), table.workers.size());
  std::set<std::pair<int, std::string>> seen;
  int last = 0;
  bool any = false;
  read_csv(in, name, {"epoch", "worker_id", "reward", "score"}, [&](const std::vector<std::string>& f, std::size_t ln) {
    const int e = parse_int(f[0], name, ln, "epoch");
    const std::string w = check_worker(f[1], name, ln);
    if (any && e < last) throw parse_error(name, ln, "epochs must not decrease");
    if (!seen.insert({e, w}).second) throw parse_error(name, ln, "duplicate row for epoch " + std::to_string(e) + ", worker " + w);
    const auto ei = epoch_index.find(e);
    if (ei == epoch_index.end()) throw parse_error(name, ln, "epoch " + std::to_string(e) + " has no inferences");
    const auto wi = worker_index.find(w);
    if (wi == worker_index.end()) throw parse_error(name, ln, "unknown worker " + w);
    reward(ei->second, wi->second) = parse_double(f[2], name, ln, "reward");
    score(ei->second, wi->second) = parse_double(f[3], name, ln, "score");
    last = e;
    any = true;
  });
  features::WorkerSideColumns side;
  side.columns.emplace("reward", std::move(reward));
  side.columns.emplace("score", std::move(score));
  return side;
}

synth::ScenarioData load_replay(const ReplayPaths& paths) {
  synth::ScenarioData d;
  auto inf = open(paths.inferences);
  auto tr = open(paths.truth);
  InferenceTable t = parse_replay(inf, tr, paths.inferences.string(), paths.truth.string());
  if (paths.market) {
    auto m = open(*paths.market);
    d.market = parse_market(m, paths.market->string());
  }
  if (paths.rewards) {
    auto r = open(*paths.rewards);
    d.side = parse_rewards(r, t, paths.rewards->string());
  }
  d.table = std::move(t);
  return d;
}

void export_replay(const synth::ScenarioData& data, const std::filesystem::path& dir,
                   const std::string& header_comment) {
  const auto* t = std::get_if<InferenceTable>(&data.table);
  if (!t) throw validation_error("only inference panels can be exported for replay");
  std::filesystem::create_directories(dir);
  auto create = [&](const char* file) {
    std::ofstream out(dir / file);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / file).string());
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    return out;
  };
  {
    auto out = create("inferences.csv");
    out << "epoch,worker_id,inference\n";
    for (std::size_t i = 0; i < t->n_epochs(); ++i)
      for (std::size_t j = 0; j < t->workers.size(); ++j)
        if (is_present(t->inference(i, j)))
          out << t->epochs[i] << ',' << t->workers[j].id << ',' << fmt(t->inference(i, j)) << '\n';
  }
  {
    auto out = create("truth.csv");
    out << "epoch,truth\n";
    for (std::size_t i = 0; i < t->n_epochs(); ++i)
      if (is_present(t->truth[i])) out << t->epochs[i] << ',' << fmt(t->truth[i]) << '\n';
  }
  if (data.market) {
    auto out = create("market.csv");
    const MarketSeries& m = *data.market;
    out << "epoch,open,high,low,close,volume\n";
    auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? fmt(v[i]) : std::string(); };
    for (std::size_t i = 0; i < m.size(); ++i)
      out << m.epochs[i] << ',' << at(m.open, i) << ',' << at(m.high, i) << ',' << at(m.low, i) << ','
          << fmt(m.close[i]) << ',' << at(m.volume, i) << '\n';
  }
}

}  // namespace fcomb::cli
