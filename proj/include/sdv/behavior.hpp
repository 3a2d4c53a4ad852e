#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdv/snapshot.hpp"
#include "sdv/types.hpp"

namespace sdv {

// One parameter value in the tree DSL: a plain number, a range written as
// `v (+-p%)`, a numeric tuple `(a, b, ...)`, or a bare identifier.
struct ParamValue {
  enum class Kind { Number, Range, Tuple, Symbol };

  Kind kind = Kind::Number;
  double number = 0.0;
  Range range;
  std::vector<double> tuple;
  std::string symbol;

  static ParamValue make_number(double v);
  static ParamValue make_range(Range r);
  static ParamValue make_tuple(std::vector<double> t);
  static ParamValue make_symbol(std::string s);

  // Numbers widen to point ranges; other conversions throw DomainError.
  Range as_range() const;
  double as_number() const;
  const std::string& as_symbol() const;

  bool operator==(const ParamValue& o) const;
  std::string str() const;
};

using ParamMap = std::map<std::string, ParamValue>;

// Lookup helpers with fallbacks for optional parameters.
double param_number(const ParamMap& params, const std::string& key, double fallback);
Range param_range(const ParamMap& params, const std::string& key, Range fallback);
std::optional<double> param_opt_number(const ParamMap& params, const std::string& key);
std::optional<std::string> param_symbol(const ParamMap& params, const std::string& key);
const std::vector<double>* param_tuple(const ParamMap& params, const std::string& key);

// One behavior-tree node. Operators carry children; condition/maneuver
// leaves carry a name and parameters; subtree_ref nodes hold the reference
// name plus per-site overrides, and after linking their expanded target as a
// single child. node_id and origin_tree are assigned by linking.
struct BTNode {
  enum class Kind { Fallback, Sequence, Parallel, Condition, Maneuver, SubtreeRef };

  Kind kind = Kind::Sequence;
  std::string name;
  ParamMap params;
  int parallel_threshold = -1;  // -1 = all children must succeed
  std::vector<BTNode> children;
  int line = 0;
  int col = 0;
  int node_id = -1;
  std::string origin_tree;

  bool is_operator() const {
    return kind == Kind::Fallback || kind == Kind::Sequence || kind == Kind::Parallel;
  }
};

struct ParsedTree {
  std::string name;
  BTNode root;
  std::string file;
};

// Parses a single DSL parameter value (number, `v (+-p%)` range, tuple, or
// bare symbol) from plain text, as used by scenario-file overrides.
ParamValue parse_param_value(const std::string& text,
                             const std::string& context = "<value>");

// Sets `key` on every node of the subtree that declares it; returns how many
// nodes were rewritten.
int override_param(BTNode& root, const std::string& key, const ParamValue& value);

// Parses DSL text containing one or more `btree NAME:` blocks. Text without
// a `btree` header is treated as a single unnamed tree. Throws ParseError
// with file:line:col on any syntax problem.
std::vector<ParsedTree> parse_trees(const std::string& source,
                                    const std::string& filename = "<string>");
// Convenience for sources holding exactly one tree.
BTNode parse_tree(const std::string& source, const std::string& filename = "<string>");
std::vector<ParsedTree> parse_tree_file(const std::string& path);

// Named tree collection with subtree references resolved. Linking expands
// every reference in place (the subtree_ref node keeps the expanded copy as
// its only child), applies reference-site parameter overrides to the copy,
// validates the condition/maneuver vocabulary, and numbers nodes preorder.
class TreeLibrary {
 public:
  void add(ParsedTree tree);
  void link();
  bool linked() const { return linked_; }

  std::vector<std::string> tree_names() const;
  bool has_tree(const std::string& name) const;
  const BTNode& tree(const std::string& name) const;
  const std::string& source_file(const std::string& name) const;

 private:
  struct Entry {
    ParsedTree parsed;
    BTNode linked_root;
  };
  BTNode expand(const std::string& name, std::vector<std::string>* stack);

  std::map<std::string, Entry> trees_;
  bool linked_ = false;
};

TreeLibrary link_library(std::vector<ParsedTree> trees);

enum class TickStatus { Success, Failure, Running };

// Maneuver request produced by a tick: the leaf's name, resolved parameters,
// and whether the leaf was still running or already satisfied.
struct Decision {
  std::string maneuver;
  ParamMap params;
  int node_id = -1;
  TickStatus status = TickStatus::Running;
};

struct TickResult {
  TickStatus status = TickStatus::Failure;
  std::optional<Decision> decision;
};

// Per-vehicle tree memory. Owned exclusively by one vehicle's planner.
struct Blackboard {
  std::map<int, double> timer_start;     // timer node -> sim time of first eval
  std::map<int, int> sequence_resume;    // sequence node -> child to resume at
  std::map<int, int> maneuver_hold;      // maneuver node -> consecutive ticks satisfied
  int active_maneuver_node = -1;
  std::set<int> visited;                 // every node id ever ticked
};

// Ticks a linked tree against the snapshot. Fallbacks re-evaluate from their
// first child every tick; sequences resume at a running child (memory kept in
// the blackboard) so a triggered maneuver keeps control until it finishes;
// parallel ticks all children and succeeds when at least `threshold` do.
// Maneuver leaves emit a decision while running and when satisfied; the
// result carries the most recent emission, preferring running over success.
// Throws LinkError when the tree was not linked.
TickResult tick(const BTNode& root, const TrafficSnapshot& world, Blackboard* memory);

int count_nodes(const BTNode& root);
void collect_nodes(const BTNode& root, std::vector<const BTNode*>* out);

// Share-ratio of behavior-tree nodes: M/L where L counts all nodes of the
// given trees and M those whose defining tree is in `shared_trees`. When an
// executed set is supplied for a tree, both counts are restricted to it.
struct ReuseInput {
  const BTNode* root = nullptr;
  const std::set<int>* executed = nullptr;
};
double internal_reuse_level(const std::vector<ReuseInput>& trees,
                            const std::set<std::string>& shared_trees);

}  // namespace sdv
