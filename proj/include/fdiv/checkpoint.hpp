#pragma once

#include <string>

#include "fdiv/env.hpp"
#include "fdiv/ficnn.hpp"
#include "fdiv/nets.hpp"

namespace fdl::io {

// Versioned JSON checkpoints: flat parameter vector + layout manifest +
// enough architecture metadata to rebuild the net. Doubles round-trip
// exactly through the serializer.

void save_policy(const std::string& path, const nets::PolicyNet& net,
                 const std::string& env_id);
nets::PolicyNet load_policy(const std::string& path, std::string* env_id = nullptr);

void save_value(const std::string& path, const nets::ValueNet& net,
                const std::string& env_id);
nets::ValueNet load_value(const std::string& path, std::string* env_id = nullptr);

void save_reward(const std::string& path, const nets::RewardNet& net,
                 const std::string& env_id);
nets::RewardNet load_reward(const std::string& path, std::string* env_id = nullptr);

void save_ficnn(const std::string& path, const conj::FicnnParams& params,
                const std::string& env_id, Interval observed_input_range);
conj::FicnnParams load_ficnn(const std::string& path, std::string* env_id = nullptr,
                             Interval* observed_input_range = nullptr);

// Tabular expert policies share the checkpoint format (kind "tabular").
void save_tabular(const std::string& path, const std::vector<int>& actions,
                  const std::string& env_id);
std::vector<int> load_tabular(const std::string& path, std::string* env_id = nullptr);

// Generic kind probe for dispatching loaders.
std::string checkpoint_kind(const std::string& path);

}  // namespace fdl::io
