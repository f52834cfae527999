#include "switchq/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace switchq {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

struct Token {
  std::string text;
  int line = 0;
};

std::vector<Token> tokenize(std::istream& in) {
  std::vector<Token> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      tokens.push_back({tok, lineno});
    }
  }
  return tokens;
}

bool parse_number(const std::string& text, double& out) {
  const char* begin = text.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + text.size() && end != begin;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ParseError(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

MdpData read_mdp_data(std::istream& in, const std::string& origin) {
  const std::vector<Token> tokens = tokenize(in);
  std::map<std::string, std::vector<Token>> fields;
  std::string active;
  for (const Token& tok : tokens) {
    double value;
    if (parse_number(tok.text, value)) {
      if (active.empty()) {
        fail(origin, tok.line, "number before any field name");
      }
      fields[active].push_back(tok);
    } else {
      active = tok.text;
      if (fields.count(active)) {
        fail(origin, tok.line, "field '" + active + "' given twice");
      }
      fields[active];
    }
  }

  auto scalar = [&](const std::string& name) {
    auto it = fields.find(name);
    if (it == fields.end() || it->second.empty()) {
      throw ParseError(origin + ": missing field '" + name + "'");
    }
    if (it->second.size() != 1) {
      fail(origin, it->second[1].line, "field '" + name + "' expects one value");
    }
    double v;
    parse_number(it->second[0].text, v);
    return v;
  };

  MdpData d;
  d.num_states = static_cast<int>(scalar("num_states"));
  d.num_actions = static_cast<int>(scalar("num_actions"));
  d.discount = scalar("discount");
  if (d.num_states <= 0 || d.num_actions <= 0) {
    throw ParseError(origin + ": num_states and num_actions must be positive");
  }
  const int ns = d.num_states;
  const int na = d.num_actions;

  auto block = [&](const std::string& name, std::size_t expected) {
    auto it = fields.find(name);
    if (it == fields.end()) {
      throw ParseError(origin + ": missing field '" + name + "'");
    }
    if (it->second.size() != expected) {
      const int line = it->second.empty() ? 0 : it->second.back().line;
      fail(origin, line,
           "field '" + name + "' expects " + std::to_string(expected) + " values, got " +
               std::to_string(it->second.size()));
    }
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
      parse_number(it->second[i].text, values[i]);
    }
    return values;
  };

  // File order is row-major (s, a, s'); internal rows are pair-indexed a*|S|+s.
  const auto trans = block("transition", static_cast<std::size_t>(ns) * na * ns);
  const auto rew = block("reward", static_cast<std::size_t>(ns) * na * ns);
  d.transition.resize(ns * na, ns);
  d.reward.resize(ns * na, ns);
  std::size_t pos = 0;
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      for (int sn = 0; sn < ns; ++sn, ++pos) {
        d.transition(pair_index(s, a, ns), sn) = trans[pos];
        d.reward(pair_index(s, a, ns), sn) = rew[pos];
      }
    }
  }
  const auto beta = block("behavior_policy", static_cast<std::size_t>(ns) * na);
  d.behavior_policy.resize(ns, na);
  pos = 0;
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a, ++pos) {
      d.behavior_policy(s, a) = beta[pos];
    }
  }
  const auto p = block("state_dist", static_cast<std::size_t>(ns));
  d.state_dist.resize(ns);
  for (int s = 0; s < ns; ++s) {
    d.state_dist[s] = p[s];
  }

  for (const auto& [name, _] : fields) {
    if (name != "num_states" && name != "num_actions" && name != "discount" &&
        name != "transition" && name != "reward" && name != "behavior_policy" &&
        name != "state_dist") {
      throw ParseError(origin + ": unknown field '" + name + "'");
    }
  }
  return d;
}

MdpData read_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open model file '" + path + "'");
  }
  return read_mdp_data(in, path);
}

Mdp load_mdp(const std::string& path) {
  return Mdp(read_mdp_file(path));
}

void write_mdp_data(std::ostream& out, const MdpData& d) {
  const int ns = d.num_states;
  const int na = d.num_actions;
  out << "num_states " << ns << "\n";
  out << "num_actions " << na << "\n";
  out << "discount " << format_double(d.discount) << "\n";
  out << "transition\n";
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      for (int sn = 0; sn < ns; ++sn) {
        out << (sn ? " " : "") << format_double(d.transition(pair_index(s, a, ns), sn));
      }
      out << "\n";
    }
  }
  out << "reward\n";
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      for (int sn = 0; sn < ns; ++sn) {
        out << (sn ? " " : "") << format_double(d.reward(pair_index(s, a, ns), sn));
      }
      out << "\n";
    }
  }
  out << "behavior_policy\n";
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      out << (a ? " " : "") << format_double(d.behavior_policy(s, a));
    }
    out << "\n";
  }
  out << "state_dist\n";
  for (int s = 0; s < ns; ++s) {
    out << (s ? " " : "") << format_double(d.state_dist[s]);
  }
  out << "\n";
}

ExperimentConfig read_config(std::istream& in, const std::string& origin) {
  const std::vector<Token> tokens = tokenize(in);
  ExperimentConfig cfg;
  std::size_t i = 0;
  auto next_value = [&](const std::string& key) -> Token {
    if (i >= tokens.size()) {
      throw ParseError(origin + ": key '" + key + "' expects a value");
    }
    return tokens[i++];
  };
  auto next_number = [&](const std::string& key) {
    const Token tok = next_value(key);
    double v;
    if (!parse_number(tok.text, v)) {
      fail(origin, tok.line, "key '" + key + "' expects a number, got '" + tok.text + "'");
    }
    return v;
  };

  while (i < tokens.size()) {
    const Token key = tokens[i++];
    if (key.text == "mdp") {
      cfg.mdp_source = next_value(key.text).text;
    } else if (key.text == "alpha") {
      cfg.alpha = next_number(key.text);
    } else if (key.text == "steps") {
      cfg.num_steps = static_cast<long long>(next_number(key.text));
    } else if (key.text == "trials") {
      cfg.num_trials = static_cast<int>(next_number(key.text));
    } else if (key.text == "seed") {
      cfg.base_seed = static_cast<std::uint64_t>(next_number(key.text));
    } else if (key.text == "stride") {
      cfg.record_stride = static_cast<long long>(next_number(key.text));
    } else if (key.text == "track_coords") {
      cfg.track_coords = next_number(key.text) != 0.0;
    } else if (key.text == "eval_steps") {
      cfg.eval_steps.clear();
      double v;
      while (i < tokens.size() && parse_number(tokens[i].text, v)) {
        cfg.eval_steps.push_back(static_cast<long long>(v));
        ++i;
      }
    } else if (key.text == "q0") {
      const Token mode = next_value(key.text);
      if (mode.text == "uniform") {
        cfg.q0_mode = Q0Mode::kUniform;
      } else if (mode.text == "qstar+uniform") {
        cfg.q0_mode = Q0Mode::kQStarPlusUniform;
      } else if (mode.text == "fixed") {
        cfg.q0_mode = Q0Mode::kFixed;
        std::vector<double> vals;
        double v;
        while (i < tokens.size() && parse_number(tokens[i].text, v)) {
          vals.push_back(v);
          ++i;
        }
        cfg.q0_fixed = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      } else {
        fail(origin, mode.line, "q0 mode must be uniform, qstar+uniform or fixed");
      }
    } else {
      fail(origin, key.line, "unknown config key '" + key.text + "'");
    }
  }
  return cfg;
}

ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  return read_config(in, path);
}

namespace {

void write_coord_headers(std::ostream& out, const std::string& prefix, int ns, int na) {
  for (int a = 0; a < na; ++a) {
    for (int s = 0; s < ns; ++s) {
      out << "," << prefix << "_" << (s + 1) << "_" << (a + 1);
    }
  }
}

void write_vector(std::ostream& out, const QVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << "," << format_double(v[i]);
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const CoupledTrajectory& traj) {
  out << "k";
  write_coord_headers(out, "q", traj.num_states, traj.num_actions);
  write_coord_headers(out, "ql", traj.num_states, traj.num_actions);
  write_coord_headers(out, "qu", traj.num_states, traj.num_actions);
  write_coord_headers(out, "qavg", traj.num_states, traj.num_actions);
  out << ",w_inf,smp_s,smp_a,smp_snext,smp_r\n";
  for (const StepRecord& rec : traj.records) {
    out << rec.k;
    write_vector(out, rec.q);
    write_vector(out, rec.q_lower);
    write_vector(out, rec.q_upper);
    write_vector(out, rec.q_avg);
    out << "," << format_double(rec.noise_infnorm);
    if (rec.sample) {
      out << "," << (rec.sample->s + 1) << "," << (rec.sample->a + 1) << ","
          << (rec.sample->s_next + 1) << "," << format_double(rec.sample->r);
    } else {
      out << ",0,0,0,0";
    }
    out << "\n";
  }
}

CoupledTrajectory read_trajectory_csv(std::istream& in, const std::string& origin) {
  std::string header;
  if (!std::getline(in, header)) {
    throw ParseError(origin + ": empty trajectory file");
  }
  // Infer |S| and |A| from the last q_<s>_<a> column.
  int ns = 0, na = 0;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("q_", 0) == 0) {
        int s, a;
        if (std::sscanf(col.c_str(), "q_%d_%d", &s, &a) == 2) {
          ns = std::max(ns, s);
          na = std::max(na, a);
        }
      }
    }
  }
  if (ns == 0 || na == 0) {
    throw ParseError(origin + ": header carries no q_<s>_<a> columns");
  }
  CoupledTrajectory traj;
  traj.num_states = ns;
  traj.num_actions = na;
  const int np = ns * na;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ls, cell, ',')) {
      double v;
      if (!parse_number(cell, v)) {
        fail(origin, lineno, "bad numeric cell '" + cell + "'");
      }
      cells.push_back(v);
    }
    if (cells.size() != static_cast<std::size_t>(4 * np + 6)) {
      fail(origin, lineno, "expected " + std::to_string(4 * np + 6) + " cells");
    }
    StepRecord rec;
    rec.k = static_cast<long long>(cells[0]);
    auto take = [&](int offset) {
      QVector v(np);
      for (int i = 0; i < np; ++i) {
        v[i] = cells[static_cast<std::size_t>(offset + i)];
      }
      return v;
    };
    rec.q = take(1);
    rec.q_lower = take(1 + np);
    rec.q_upper = take(1 + 2 * np);
    rec.q_avg = take(1 + 3 * np);
    rec.gap = rec.q_upper - rec.q_lower;
    rec.noise_infnorm = cells[static_cast<std::size_t>(1 + 4 * np)];
    const int smp_s = static_cast<int>(cells[static_cast<std::size_t>(2 + 4 * np)]);
    if (smp_s > 0) {
      Sample smp;
      smp.s = smp_s - 1;
      smp.a = static_cast<int>(cells[static_cast<std::size_t>(3 + 4 * np)]) - 1;
      smp.s_next = static_cast<int>(cells[static_cast<std::size_t>(4 + 4 * np)]) - 1;
      smp.r = cells[static_cast<std::size_t>(5 + 4 * np)];
      rec.sample = smp;
    }
    traj.records.push_back(std::move(rec));
  }
  return traj;
}

void write_gap_csv(std::ostream& out, const CoupledTrajectory& traj) {
  out << "k";
  write_coord_headers(out, "err", traj.num_states, traj.num_actions);
  out << ",err_inf\n";
  for (const StepRecord& rec : traj.records) {
    out << rec.k;
    write_vector(out, rec.gap);
    out << "," << format_double(rec.gap.lpNorm<Eigen::Infinity>()) << "\n";
  }
}

}  // namespace switchq
