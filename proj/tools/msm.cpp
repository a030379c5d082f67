#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "msm/analysis.hpp"
#include "msm/dataio.hpp"
#include "msm/error.hpp"

namespace {

using msm::analysis::json;
using msm::analysis::MappingKind;

enum class Type { number, integer, uint, text, numbers, texts, transition, profile };

// A command-line flag that becomes one analysis parameter when given.
struct ParamFlag {
  std::string flag;
  std::string key;
  Type type;
  std::string help;
};

struct Command {
  std::string name;      // subcommand
  std::string analysis;  // dispatcher name
  MappingKind kind;
  bool msm_allowed;
  std::vector<ParamFlag> flags;
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_number(const std::string& flag, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  msm::fail_validation("InvalidParameter", "--" + flag + " expects a number", {{"value", v}});
}

json convert(const ParamFlag& f, const std::string& v) {
  switch (f.type) {
    case Type::number: return to_number(f.flag, v);
    case Type::integer: return static_cast<long long>(to_number(f.flag, v));
    case Type::uint: return static_cast<unsigned long long>(to_number(f.flag, v));
    case Type::text: return v;
    case Type::numbers: {
      json out = json::array();
      for (const auto& x : split(v)) out.push_back(to_number(f.flag, x));
      return out;
    }
    case Type::texts: return split(v);
    case Type::transition: {
      const auto parts = split(v);
      if (parts.size() != 2) msm::fail_validation("InvalidParameter", "--" + f.flag + " expects h,j", {{"value", v}});
      return {static_cast<int>(to_number(f.flag, parts[0])), static_cast<int>(to_number(f.flag, parts[1]))};
    }
    case Type::profile: {
      json out = json::object();
      for (const auto& kv : split(v)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) msm::fail_validation("InvalidParameter", "--profile expects name=value pairs");
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      return out;
    }
  }
  return v;
}

std::vector<Command> commands() {
  const ParamFlag ties{"ties", "ties", Type::text, "efron or breslow"};
  const ParamFlag conf{"conf-level", "conf_level", Type::number, "confidence level"};
  const ParamFlag transition{"transition", "transition", Type::transition, "transition as h,j"};
  const ParamFlag n_boot{"n-boot", "n_boot", Type::integer, "bootstrap replicates"};
  const ParamFlag alpha{"alpha", "alpha", Type::number, "significance level"};
  const ParamFlag comparator{"comparator", "comparator", Type::text, "auto, lm or lmaj"};
  return {
      {"km", "km", MappingKind::survival, false,
       {{"group", "group_by", Type::text, "categorical covariate to split by"},
        conf,
        {"conf-type", "conf_type", Type::text, "plain, log or log-log"}}},
      {"ranktest", "ranktest", MappingKind::survival, false,
       {{"group", "group_by", Type::text, "grouping covariate"}, {"rho", "rho", Type::number, "weight exponent"}}},
      {"cox", "cox", MappingKind::survival, false, {ties}},
      {"phtest", "phtest", MappingKind::survival, false,
       {ties, {"transform", "transform", Type::text, "km, rank, identity or log"}}},
      {"anova", "anova", MappingKind::survival, false,
       {ties, {"nonlinear", "nonlinear", Type::texts, "covariates to test for nonlinearity"}}},
      {"aft", "aft", MappingKind::survival, false,
       {{"distributions", "distributions", Type::texts, "distributions to fit"}}},
      {"counts", "counts", MappingKind::idm, true, {}},
      {"msmreg", "msmreg", MappingKind::idm, true,
       {ties,
        {"clock", "clock", Type::text, "markov or semi-markov"},
        {"transition-number", "transition", Type::integer, "fit only this transition"}}},
      {"transprob", "transprob", MappingKind::idm, true,
       {{"method", "method", Type::text, "aj, lm, plm, lmaj, ipcw or breslow"},
        {"s", "s", Type::number, "starting time"},
        {"grid", "grid", Type::numbers, "evaluation times"},
        {"from-state", "from_state", Type::integer, "report this starting state only"},
        {"covariate", "covariate", Type::text, "kernel conditioning covariate"},
        {"value", "value", Type::number, "kernel conditioning value"},
        {"bandwidth", "bandwidth", Type::number, "kernel bandwidth"},
        {"profile", "profile", Type::profile, "covariate profile name=value,..."},
        {"model-covariates", "covariates", Type::texts, "Breslow model covariates"},
        ties,
        n_boot,
        conf}},
      {"cif", "cif", MappingKind::idm, false,
       {{"grid", "grid", Type::numbers, "evaluation times"},
        {"covariate", "covariate", Type::text, "conditioning covariate"},
        {"level", "level", Type::text, "categorical level"},
        {"value", "value", Type::number, "continuous value"},
        {"bandwidth", "bandwidth", Type::number, "kernel bandwidth"},
        n_boot,
        conf}},
      {"markov-local", "markov/local", MappingKind::idm, true,
       {{"method", "method", Type::text, "auc or logrank"},
        {"s", "s", Type::numbers, "landmark time or times"},
        transition,
        n_boot,
        comparator,
        alpha}},
      {"markov-global", "markov/global", MappingKind::idm, true,
       {{"method", "method", Type::text, "cox, auc or logrank"},
        transition,
        {"clock", "clock", Type::text, "markov or semi-markov"},
        ties,
        {"percentiles", "percentiles", Type::numbers, "landmark percentiles"},
        n_boot,
        {"n-perm", "n_perm", Type::integer, "permutations"},
        alpha,
        comparator}},
  };
}

json read_json_arg(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) msm::fail_validation("FileNotFound", "cannot read " + arg.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    msm::fail_validation("InvalidJson", "not valid JSON", {{"reason", e.what()}});
  }
}

void write_plot_data(const std::string& path, const json& out) {
  std::ofstream f(path);
  if (!f) msm::fail_validation("FileNotWritable", "cannot write " + path);
  auto cell = [](const json& v) { return v.is_null() ? std::string("NA") : v.dump(); };
  const auto& r = out["result"];
  const auto& name = out["analysis"];
  if (name == "km") {
    f << "group,time,surv,lower,upper\n";
    for (const auto& c : r["curves"]) {
      const std::string g = c["group"].is_null() ? "all" : c["group"].get<std::string>();
      for (const auto& p : c["points"]) {
        f << g << ',' << cell(p["time"]) << ',' << cell(p["surv"]) << ',' << cell(p["lower"]) << ','
          << cell(p["upper"]) << '\n';
      }
    }
  } else if (name == "transprob") {
    f << "label,t,est,lower,upper\n";
    for (const auto& c : r["curves"]) {
      for (const auto& p : c["grid"]) {
        f << c["label"].get<std::string>() << ',' << cell(p["t"]) << ',' << cell(p["est"]) << ',' << cell(p["lower"])
          << ',' << cell(p["upper"]) << '\n';
      }
    }
  } else if (name == "cif") {
    f << "t,est,lower,upper,direct_death,initial\n";
    for (const auto& p : r["grid"]) {
      f << cell(p["t"]) << ',' << cell(p["est"]) << ',' << cell(p["lower"]) << ',' << cell(p["upper"]) << ','
        << cell(p["direct_death"]) << ',' << cell(p["initial"]) << '\n';
    }
  } else {
    msm::fail_validation("NoPlotData", "this analysis has no curve data", {{"analysis", name}});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survival and multi-state model analyses"};
  app.set_version_flag("--version", [] { return msm::analysis::version(); });
  app.require_subcommand(1);

  struct Inputs {
    std::string input, mapping_file, params, plot_path, model = "idm";
    std::string time, status, time1, event1, stime, event, covariates;
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> values;
  } in;

  const auto cmds = commands();
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, "run the " + cmd.analysis + " analysis");
    sub->add_option("--input,-i", in.input, "CSV input file")->required()->check(CLI::ExistingFile);
    sub->add_option("--mapping", in.mapping_file, "mapping JSON file (overrides column flags)");
    sub->add_option("--covariates", in.covariates, "comma-separated covariates");
    if (cmd.kind == MappingKind::survival) {
      sub->add_option("--time", in.time, "time column");
      sub->add_option("--status", in.status, "status column");
    } else {
      sub->add_option("--time1", in.time1, "time to illness column");
      sub->add_option("--event1", in.event1, "illness indicator column");
      sub->add_option("--stime", in.stime, "time to death or censoring column");
      sub->add_option("--event", in.event, "death indicator column");
      if (cmd.msm_allowed) sub->add_option("--model", in.model, "idm or msm")->check(CLI::IsMember({"idm", "msm"}));
    }
    for (const auto& f : cmd.flags) sub->add_option("--" + f.flag, in.values[f.flag], f.help);
    sub->add_option("--seed", in.seed, "random seed");
    sub->add_option("--params", in.params, "parameters as JSON, or @file");
    sub->add_option("--emit-plot-data", in.plot_path, "write curve grids to this CSV file");
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Command* cmd = nullptr;
  CLI::App* sub = nullptr;
  for (const auto& [s, c] : subs) {
    if (s->parsed()) {
      sub = s;
      cmd = c;
    }
  }

  try {
    json mapping = json::object();
    auto kind = cmd->kind;
    if (cmd->msm_allowed && in.model == "msm") kind = MappingKind::msm;
    auto put = [&](const char* key, const std::string& v) {
      if (!v.empty()) mapping[key] = v;
    };
    put("time", in.time);
    put("status", in.status);
    put("time1", in.time1);
    put("event1", in.event1);
    put("stime", in.stime);
    put("event", in.event);
    if (!in.covariates.empty()) mapping["covariates"] = split(in.covariates);
    if (!in.mapping_file.empty()) {
      auto file = read_json_arg("@" + in.mapping_file);
      if (!file.is_object()) msm::fail_validation("InvalidJson", "mapping file must hold a JSON object");
      if (file.contains("kind")) {
        kind = msm::analysis::parse_kind(file["kind"].get<std::string>());
        file.erase("kind");
      }
      mapping.update(file);
    }

    json params = json::object();
    for (const auto& f : cmd->flags) {
      if (sub->count("--" + f.flag) > 0) params[f.key] = convert(f, in.values[f.flag]);
    }
    // A single landmark stays a scalar so the echo matches a scalar request.
    if (params.contains("s") && params["s"].is_array() && params["s"].size() == 1) params["s"] = params["s"][0];
    if (!in.params.empty()) {
      const auto extra = read_json_arg(in.params);
      if (!extra.is_object()) msm::fail_validation("InvalidJson", "--params must hold a JSON object");
      params.update(extra);
    }
    if (in.seed) params["seed"] = *in.seed;

    const auto data = msm::dataio::read_csv_file(in.input);
    const auto bound = msm::analysis::bind(data, kind, mapping);
    const auto out = msm::analysis::run(cmd->analysis, bound, params, msm::analysis::fresh_seed());
    if (!in.plot_path.empty()) write_plot_data(in.plot_path, out);
    std::cout << msm::analysis::dump(out) << '\n';
    return 0;
  } catch (const msm::Error& e) {
    std::cerr << e.to_json().dump() << '\n';
    return e.kind() == msm::ErrorKind::validation ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}, {"detail", json::object()}}.dump() << '\n';
    return 3;
  }
}
