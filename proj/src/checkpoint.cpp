#include "fdiv/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace fdl::io {

namespace {

using nlohmann::json;

json layout_json(const diff::ParamLayout& layout) {
  json out = json::array();
  for (const auto& s : layout.segments()) {
    out.push_back({{"name", s.name}, {"offset", s.offset}, {"size", s.size}});
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

json header(const std::string& kind, const std::string& env_id) {
  return json{{"format_version", 1}, {"kind", kind}, {"env_id", env_id}};
}

void check_header(const json& j, const std::string& kind, const std::string& path) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != 1) {
    throw ConfigError("checkpoint '" + path + "': unsupported format version");
  }
  if (j.at("kind").get<std::string>() != kind) {
    throw ConfigError("checkpoint '" + path + "' holds kind '" +
                      j.at("kind").get<std::string>() + "', expected '" + kind + "'");
  }
}

std::string activation_name(divg::FinalActivation a) {
  switch (a) {
    case divg::FinalActivation::Identity: return "identity";
    case divg::FinalActivation::Sigmoid: return "sigmoid";
    case divg::FinalActivation::NegExp: return "neg_exp";
    case divg::FinalActivation::LogSigmoid: return "log_sigmoid";
  }
  return "identity";
}

divg::FinalActivation activation_from(const std::string& s) {
  if (s == "identity") return divg::FinalActivation::Identity;
  if (s == "sigmoid") return divg::FinalActivation::Sigmoid;
  if (s == "neg_exp") return divg::FinalActivation::NegExp;
  if (s == "log_sigmoid") return divg::FinalActivation::LogSigmoid;
  throw ConfigError("unknown activation '" + s + "' in checkpoint");
}

std::vector<int> hidden_of(const std::vector<int>& dims) {
  // interior layer widths
  return {dims.begin() + 1, dims.end() - 1};
}

}  // namespace

void save_policy(const std::string& path, const nets::PolicyNet& net,
                 const std::string& env_id) {
  json j = header("policy", env_id);
  j["arch"] = {{"obs_dim", net.obs_dim},
               {"num_actions", net.num_actions},
               {"hidden", hidden_of(net.mlp.dims())}};
  j["layout"] = layout_json(net.params.layout);
  j["values"] = net.params.values;
  write_json(path, j);
}

nets::PolicyNet load_policy(const std::string& path, std::string* env_id) {
  json j = read_json(path);
  check_header(j, "policy", path);
  if (env_id != nullptr) *env_id = j.at("env_id").get<std::string>();
  Rng rng(0);
  std::vector<int> hidden = j.at("arch").at("hidden").get<std::vector<int>>();
  nets::PolicyNet net = nets::PolicyNet::create(
      j.at("arch").at("obs_dim").get<int>(), j.at("arch").at("num_actions").get<int>(),
      rng, hidden);
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != net.params.size()) {
    throw ConfigError("checkpoint '" + path + "': parameter count mismatch");
  }
  net.params.values = std::move(values);
  net.params.validate();
  return net;
}

void save_value(const std::string& path, const nets::ValueNet& net,
                const std::string& env_id) {
  json j = header("value", env_id);
  j["arch"] = {{"obs_dim", net.obs_dim}, {"hidden", hidden_of(net.mlp.dims())}};
  j["layout"] = layout_json(net.params.layout);
  j["values"] = net.params.values;
  write_json(path, j);
}

nets::ValueNet load_value(const std::string& path, std::string* env_id) {
  json j = read_json(path);
  check_header(j, "value", path);
  if (env_id != nullptr) *env_id = j.at("env_id").get<std::string>();
  Rng rng(0);
  std::vector<int> hidden = j.at("arch").at("hidden").get<std::vector<int>>();
  nets::ValueNet net =
      nets::ValueNet::create(j.at("arch").at("obs_dim").get<int>(), rng, hidden);
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != net.params.size()) {
    throw ConfigError("checkpoint '" + path + "': parameter count mismatch");
  }
  net.params.values = std::move(values);
  net.params.validate();
  return net;
}

void save_reward(const std::string& path, const nets::RewardNet& net,
                 const std::string& env_id) {
  json j = header("reward", env_id);
  j["arch"] = {{"obs_dim", net.obs_dim},
               {"num_actions", net.num_actions},
               {"activation", activation_name(net.activation)},
               {"hidden", hidden_of(net.mlp.dims())}};
  j["layout"] = layout_json(net.params.layout);
  j["values"] = net.params.values;
  write_json(path, j);
}

nets::RewardNet load_reward(const std::string& path, std::string* env_id) {
  json j = read_json(path);
  check_header(j, "reward", path);
  if (env_id != nullptr) *env_id = j.at("env_id").get<std::string>();
  Rng rng(0);
  std::vector<int> hidden = j.at("arch").at("hidden").get<std::vector<int>>();
  nets::RewardNet net = nets::RewardNet::create(
      j.at("arch").at("obs_dim").get<int>(), j.at("arch").at("num_actions").get<int>(),
      activation_from(j.at("arch").at("activation").get<std::string>()), rng, hidden);
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != net.params.size()) {
    throw ConfigError("checkpoint '" + path + "': parameter count mismatch");
  }
  net.params.values = std::move(values);
  net.params.validate();
  return net;
}

void save_ficnn(const std::string& path, const conj::FicnnParams& params,
                const std::string& env_id, Interval observed_input_range) {
  json j = header("fstar", env_id);
  j["arch"] = {{"layers", params.layer_count}, {"nodes", params.nodes_per_layer}};
  j["meta"] = {{"input_range_lo", observed_input_range.lo},
               {"input_range_hi", observed_input_range.hi}};
  j["layout"] = layout_json(params.make_layout());
  j["values"] = params.values;
  write_json(path, j);
}

conj::FicnnParams load_ficnn(const std::string& path, std::string* env_id,
                             Interval* observed_input_range) {
  json j = read_json(path);
  check_header(j, "fstar", path);
  if (env_id != nullptr) *env_id = j.at("env_id").get<std::string>();
  conj::FicnnParams p;
  p.layer_count = j.at("arch").at("layers").get<int>();
  p.nodes_per_layer = j.at("arch").at("nodes").get<int>();
  p.values = j.at("values").get<std::vector<double>>();
  if (p.values.size() != p.param_count()) {
    throw ConfigError("checkpoint '" + path + "': parameter count mismatch");
  }
  if (observed_input_range != nullptr) {
    observed_input_range->lo = j.at("meta").at("input_range_lo").get<double>();
    observed_input_range->hi = j.at("meta").at("input_range_hi").get<double>();
  }
  return p;
}

void save_tabular(const std::string& path, const std::vector<int>& actions,
                  const std::string& env_id) {
  json j = header("tabular", env_id);
  j["values"] = actions;
  write_json(path, j);
}

std::vector<int> load_tabular(const std::string& path, std::string* env_id) {
  json j = read_json(path);
  check_header(j, "tabular", path);
  if (env_id != nullptr) *env_id = j.at("env_id").get<std::string>();
  return j.at("values").get<std::vector<int>>();
}

std::string checkpoint_kind(const std::string& path) {
  return read_json(path).at("kind").get<std::string>();
}

}  // namespace fdl::io
