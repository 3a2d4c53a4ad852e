#include <algorithm>
#include <set>
#include <sstream>

#include "sdv/behavior.hpp"

namespace sdv {
namespace {

struct LeafSpec {
  std::set<std::string> keys;
  std::set<std::string> required;
};

const std::map<std::string, LeafSpec>& condition_vocabulary() {
  static const std::map<std::string, LeafSpec> vocab = {
      {"reached_goal", {{"margin"}, {}}},
      {"lead_vehicle_exists", {{"max_distance"}, {}}},
      {"gap_to", {{"vehicle", "range", "target_lane_id"}, {"vehicle", "range"}}},
      {"sim_time_elapsed", {{"t"}, {"t"}}},
      {"timer", {{"t"}, {"t"}}},
      {"lane_occupied", {{"lane_id", "ahead", "behind"}, {}}},
      {"stop_line_ahead", {{"within"}, {}}},
  };
  return vocab;
}

const std::map<std::string, LeafSpec>& maneuver_vocabulary() {
  static const std::map<std::string, LeafSpec> vocab = {
      {"velocity_keeping", {{"target_speed", "lateral_offset"}, {"target_speed"}}},
      {"vehicle_following", {{"vehicle", "time_gap"}, {}}},
      {"lane_swerve", {{"target_lane_id", "lateral_offset"}, {"target_lane_id"}}},
      {"merge_in_front",
       {{"vehicle", "delta_s", "target_lane_id", "acceptance_gap"}, {"vehicle", "delta_s"}}},
      {"stop", {{"stop_point", "margin"}, {}}},
      {"reverse", {{"target_speed"}, {"target_speed"}}},
  };
  return vocab;
}

// Parameters every maneuver accepts: horizon, sampling, cost weights, limits,
// and collision/proximity tuning.
bool is_common_maneuver_key(const std::string& key) {
  static const std::set<std::string> common = {
      "T",        "samples_per_param", "weight_time",  "weight_efficiency",
      "weight_lane_offset", "weight_jerk", "weight_accel", "weight_proximity",
      "max_jerk_lon", "max_jerk_lat", "max_accel_lon", "max_accel_lat",
      "collision_ignore"};
  if (common.count(key)) return true;
  return key.rfind("proximity_factor_", 0) == 0;
}

void stamp_origin(BTNode* node, const std::string& tree_name) {
  node->origin_tree = tree_name;
  for (BTNode& c : node->children) stamp_origin(&c, tree_name);
}

// Sets `key` on every node of the expanded subtree that declares it.
int apply_override(BTNode* node, const std::string& key, const ParamValue& value) {
  int hits = 0;
  if (node->params.count(key)) {
    node->params[key] = value;
    ++hits;
  }
  for (BTNode& c : node->children) hits += apply_override(&c, key, value);
  return hits;
}

void number_nodes(BTNode* node, int* next) {
  node->node_id = (*next)++;
  for (BTNode& c : node->children) number_nodes(&c, next);
}

std::string at_location(const std::string& file, const BTNode& node) {
  std::ostringstream os;
  os << file << ":" << node.line << ":" << node.col << ": ";
  return os.str();
}

void validate_leaf(const BTNode& node, const LeafSpec& spec, bool allow_common,
                   const std::string& file, const char* what) {
  for (const auto& [key, value] : node.params) {
    if (spec.keys.count(key)) continue;
    if (allow_common && is_common_maneuver_key(key)) continue;
    throw LinkError(at_location(file, node) + std::string(what) + " '" + node.name +
                    "' does not declare parameter '" + key + "'");
  }
  for (const std::string& key : spec.required) {
    if (!node.params.count(key)) {
      throw LinkError(at_location(file, node) + std::string(what) + " '" + node.name +
                      "' is missing required parameter '" + key + "'");
    }
  }
}

void validate_tree(const BTNode& node, const std::string& file) {
  switch (node.kind) {
    case BTNode::Kind::Condition: {
      auto it = condition_vocabulary().find(node.name);
      if (it == condition_vocabulary().end()) {
        throw LinkError(at_location(file, node) + "unknown condition '" + node.name + "'");
      }
      validate_leaf(node, it->second, false, file, "condition");
      break;
    }
    case BTNode::Kind::Maneuver: {
      auto it = maneuver_vocabulary().find(node.name);
      if (it == maneuver_vocabulary().end()) {
        throw LinkError(at_location(file, node) + "unknown maneuver '" + node.name + "'");
      }
      validate_leaf(node, it->second, true, file, "maneuver");
      break;
    }
    case BTNode::Kind::Parallel: {
      const int n = static_cast<int>(node.children.size());
      if (node.parallel_threshold > n) {
        throw LinkError(at_location(file, node) + "parallel threshold " +
                        std::to_string(node.parallel_threshold) + " exceeds " +
                        std::to_string(n) + " children");
      }
      break;
    }
    default:
      break;
  }
  for (const BTNode& c : node.children) validate_tree(c, file);
}

}  // namespace

void TreeLibrary::add(ParsedTree tree) {
  if (linked_) throw LinkError("cannot add trees to an already linked library");
  auto it = trees_.find(tree.name);
  if (it != trees_.end()) {
    throw LinkError("duplicate tree name '" + tree.name + "' (" + it->second.parsed.file +
                    " and " + tree.file + ")");
  }
  Entry entry;
  entry.parsed = std::move(tree);
  trees_.emplace(entry.parsed.name, std::move(entry));
}

BTNode TreeLibrary::expand(const std::string& name, std::vector<std::string>* stack) {
  auto it = trees_.find(name);
  if (it == trees_.end()) {
    std::string context = stack->empty() ? "" : " referenced from '" + stack->back() + "'";
    throw LinkError("unknown subtree '" + name + "'" + context);
  }
  if (std::find(stack->begin(), stack->end(), name) != stack->end()) {
    std::ostringstream os;
    os << "subtree reference cycle: ";
    bool in_cycle = false;
    for (const std::string& s : *stack) {
      if (s == name) in_cycle = true;
      if (in_cycle) os << s << " -> ";
    }
    os << name;
    throw LinkError(os.str());
  }
  stack->push_back(name);
  BTNode root = it->second.parsed.root;
  stamp_origin(&root, name);

  // Resolve references bottom-up so later (outer) overrides win over inner ones.
  struct Resolver {
    TreeLibrary* lib;
    std::vector<std::string>* stack;
    const std::string& file;
    void walk(BTNode* node) {
      if (node->kind == BTNode::Kind::SubtreeRef) {
        BTNode child = lib->expand(node->name, stack);
        for (const auto& [key, value] : node->params) {
          if (apply_override(&child, key, value) == 0) {
            throw LinkError(at_location(file, *node) + "override of undeclared parameter '" +
                            key + "' on subtree '" + node->name + "'");
          }
        }
        node->children.clear();
        node->children.push_back(std::move(child));
        return;
      }
      for (BTNode& c : node->children) walk(&c);
    }
  };
  Resolver resolver{this, stack, it->second.parsed.file};
  resolver.walk(&root);
  stack->pop_back();
  return root;
}

void TreeLibrary::link() {
  for (auto& [name, entry] : trees_) {
    std::vector<std::string> stack;
    entry.linked_root = expand(name, &stack);
    int next = 0;
    number_nodes(&entry.linked_root, &next);
    validate_tree(entry.linked_root, entry.parsed.file);
  }
  linked_ = true;
}

std::vector<std::string> TreeLibrary::tree_names() const {
  std::vector<std::string> names;
  for (const auto& [name, entry] : trees_) names.push_back(name);
  return names;
}

bool TreeLibrary::has_tree(const std::string& name) const { return trees_.count(name) > 0; }

const BTNode& TreeLibrary::tree(const std::string& name) const {
  if (!linked_) throw LinkError("tree library is not linked");
  auto it = trees_.find(name);
  if (it == trees_.end()) throw LinkError("unknown tree '" + name + "'");
  return it->second.linked_root;
}

const std::string& TreeLibrary::source_file(const std::string& name) const {
  auto it = trees_.find(name);
  if (it == trees_.end()) throw LinkError("unknown tree '" + name + "'");
  return it->second.parsed.file;
}

int override_param(BTNode& root, const std::string& key, const ParamValue& value) {
  return apply_override(&root, key, value);
}

TreeLibrary link_library(std::vector<ParsedTree> trees) {
  TreeLibrary lib;
  for (ParsedTree& tree : trees) lib.add(std::move(tree));
  lib.link();
  return lib;
}

int count_nodes(const BTNode& root) {
  int n = 1;
  for (const BTNode& c : root.children) n += count_nodes(c);
  return n;
}

void collect_nodes(const BTNode& root, std::vector<const BTNode*>* out) {
  out->push_back(&root);
  for (const BTNode& c : root.children) collect_nodes(c, out);
}

double internal_reuse_level(const std::vector<ReuseInput>& trees,
                            const std::set<std::string>& shared_trees) {
  long total = 0;
  long shared = 0;
  for (const ReuseInput& input : trees) {
    if (!input.root) continue;
    std::vector<const BTNode*> nodes;
    collect_nodes(*input.root, &nodes);
    for (const BTNode* node : nodes) {
      if (input.executed && !input.executed->count(node->node_id)) continue;
      ++total;
      if (shared_trees.count(node->origin_tree)) ++shared;
    }
  }
  return total > 0 ? static_cast<double>(shared) / static_cast<double>(total) : 0.0;
}

}  // namespace sdv
