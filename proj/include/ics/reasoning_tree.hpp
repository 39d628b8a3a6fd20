#pragma once

/**
 * Reasoning tree: the state representation for thought-by-thought generation.
 *
 * The problem context sits at the root; every thought is a child node whose
 * step_index is its 1-based position on the root-to-leaf path. The initial
 * generation traces a single path; each correction iteration backtracks to an
 * earlier node and grows a sibling branch, so the tree records the full
 * correction history. Children are kept in creation order, which makes
 * iteration k's branch the k-th child at its branch point and keeps replay
 * deterministic.
 *
 * Trees stream to disk as a line-oriented record format: a header record
 * carrying the problem, then one record per node in creation order (see
 * serialize()). One writer per tree; concurrent readers are fine once writes
 * stop.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ics/answer_kit.hpp"
#include "ics/errors.hpp"
#include "ics/tokenize.hpp"

namespace ics {

struct Problem {
  std::string id;
  std::string question;
  std::string gold_answer;
  AnswerMode answer_mode = AnswerMode::ExactMath;
  std::string dataset;

  friend bool operator==(const Problem&, const Problem&) = default;
};

inline nlohmann::json problem_to_json(const Problem& p) {
  return {{"id", p.id},
          {"question", p.question},
          {"gold_answer", p.gold_answer},
          {"answer_mode", std::string(answer_mode_name(p.answer_mode))},
          {"dataset", p.dataset}};
}

inline Problem problem_from_json(const nlohmann::json& j) {
  Problem p;
  p.id = j.at("id").get<std::string>();
  p.question = j.at("question").get<std::string>();
  p.gold_answer = j.at("gold_answer").get<std::string>();
  auto mode = parse_answer_mode(j.at("answer_mode").get<std::string>());
  if (!mode) throw std::runtime_error("unknown answer_mode: " + j.at("answer_mode").get<std::string>());
  p.answer_mode = *mode;
  p.dataset = j.value("dataset", std::string());
  return p;
}

/// One reasoning step. Text never contains the thought delimiter; step_index
/// is 1-based (the root sits at step 0 and carries no thought).
struct Thought {
  std::string text;
  int step_index = 0;
  std::size_t token_count = 0;

  friend bool operator==(const Thought&, const Thought&) = default;
};

using NodeId = std::uint32_t;
inline constexpr NodeId kRootNode = 0;

struct TreeNode {
  NodeId node_id = 0;
  std::optional<NodeId> parent;
  Thought thought;
  std::vector<NodeId> children;
  int iteration_created = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TerminalStatus {
  enum class Kind { Ongoing, Answered, MaxDepth };
  Kind kind = Kind::Ongoing;
  std::string answer;  // set iff kind == Answered

  static TerminalStatus ongoing() { return {}; }
  static TerminalStatus answered(std::string a) { return {Kind::Answered, std::move(a)}; }
  static TerminalStatus max_depth() { return {Kind::MaxDepth, {}}; }

  friend bool operator==(const TerminalStatus&, const TerminalStatus&) = default;
};

/// One root-to-leaf path. node_path[0] is always the root; node_path[i] holds
/// the thought at step i, so thought_count() = node_path.size() - 1.
struct Trajectory {
  std::vector<NodeId> node_path;
  TerminalStatus terminal;
  int iteration = 0;
  bool degenerate = false;  // generation gave up on an empty completion

  std::size_t thought_count() const { return node_path.empty() ? 0 : node_path.size() - 1; }
};

/// State to resume generation from: the problem plus thoughts 1..e-1, i.e.
/// everything at and below `node` on its root path.
struct PrefixState {
  NodeId node = kRootNode;
};

class ReasoningTree {
 public:
  explicit ReasoningTree(Problem problem) : problem_(std::move(problem)) {
    nodes_.push_back(TreeNode{kRootNode, std::nullopt, Thought{}, {}, 0});
  }

  const Problem& problem() const { return problem_; }
  std::size_t size() const { return nodes_.size(); }

  const TreeNode& node(NodeId id) const {
    if (id >= nodes_.size()) throw UnknownNode("no node with id " + std::to_string(id));
    return nodes_[id];
  }

  /// Append one thought under `parent`. Any embedded delimiter markers are
  /// stripped so the Thought invariant holds regardless of caller hygiene.
  NodeId append_thought(NodeId parent, std::string_view text, int iteration = 0) {
    const TreeNode& p = node(parent);
    Thought t;
    t.text = strip_delimiters(text);
    t.step_index = p.thought.step_index + 1;
    t.token_count = approx_token_count(t.text);
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(TreeNode{id, parent, std::move(t), {}, iteration});
    nodes_[parent].children.push_back(id);
    return id;
  }

  /// Root-to-`leaf` path, inclusive on both ends.
  std::vector<NodeId> path_to(NodeId leaf) const {
    std::vector<NodeId> rev;
    NodeId cur = leaf;
    for (;;) {
      const TreeNode& n = node(cur);
      rev.push_back(cur);
      if (!n.parent) break;
      cur = *n.parent;
    }
    return {rev.rbegin(), rev.rend()};
  }

  /// Thought texts at steps 1..e-1 of `traj`, in order. e=1 yields an empty
  /// prefix (regenerate from scratch).
  std::vector<std::string> prefix_texts(const Trajectory& traj, int error_step) const {
    check_step(traj, error_step);
    std::vector<std::string> out;
    for (int i = 1; i < error_step; ++i) out.push_back(node(traj.node_path[i]).thought.text);
    return out;
  }

  /// Backtrack state for resampling: the node at step e-1 (the root when e=1).
  PrefixState prefix_state(const Trajectory& traj, int error_step) const {
    check_step(traj, error_step);
    return PrefixState{traj.node_path[static_cast<std::size_t>(error_step) - 1]};
  }

  /// Path from root down to the prefix node, as thought texts (may be empty).
  std::vector<std::string> thoughts_below(const PrefixState& state) const {
    std::vector<std::string> out;
    for (NodeId id : path_to(state.node))
      if (id != kRootNode) out.push_back(node(id).thought.text);
    return out;
  }

  /// "Step i: <text>" lines for steps 1..n, newline-separated.
  std::string render_numbered(const Trajectory& traj) const {
    if (traj.thought_count() == 0) throw EmptyTrajectory();
    std::string out;
    for (std::size_t i = 1; i < traj.node_path.size(); ++i) {
      if (i > 1) out += '\n';
      out += "Step " + std::to_string(i) + ": " + node(traj.node_path[i]).thought.text;
    }
    return out;
  }

  /// Line-oriented record stream: a header record with the problem, then one
  /// record per node in creation order. UTF-8 throughout.
  std::string serialize() const {
    nlohmann::json header = {{"format", "ics-tree"}, {"version", 1}, {"problem", problem_to_json(problem_)}};
    std::string out = header.dump();
    out += '\n';
    for (const TreeNode& n : nodes_) {
      nlohmann::json rec = {{"node_id", n.node_id},
                            {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
                            {"step_index", n.thought.step_index},
                            {"iteration_created", n.iteration_created},
                            {"text", n.thought.text}};
      out += rec.dump();
      out += '\n';
    }
    return out;
  }

  static ReasoningTree deserialize(std::string_view data) {
    std::size_t offset = 0;
    auto header = next_record(data, offset);
    if (!header.first) throw MalformedInput("missing tree header", 0);
    nlohmann::json h = parse_record(*header.first, header.second);
    if (h.value("format", "") != "ics-tree" || h.value("version", 0) != 1)
      throw MalformedInput("not an ics-tree v1 stream", header.second);
    ReasoningTree tree{[&] {
      try {
        return problem_from_json(h.at("problem"));
      } catch (const std::exception& e) {
        throw MalformedInput(std::string("bad problem record: ") + e.what(), header.second);
      }
    }()};
    tree.nodes_.clear();

    offset = header.second + header.first->size() + 1;
    for (;;) {
      auto rec = next_record(data, offset);
      if (!rec.first) break;
      nlohmann::json j = parse_record(*rec.first, rec.second);
      try {
        TreeNode n;
        n.node_id = j.at("node_id").get<NodeId>();
        if (!j.at("parent").is_null()) n.parent = j.at("parent").get<NodeId>();
        n.thought.step_index = j.at("step_index").get<int>();
        n.thought.text = j.at("text").get<std::string>();
        n.thought.token_count = approx_token_count(n.thought.text);
        n.iteration_created = j.at("iteration_created").get<int>();
        if (n.node_id != tree.nodes_.size())
          throw std::runtime_error("node ids must be dense and in creation order");
        if (n.parent) {
          if (*n.parent >= tree.nodes_.size()) throw std::runtime_error("parent not yet defined");
          if (n.thought.step_index != tree.nodes_[*n.parent].thought.step_index + 1)
            throw std::runtime_error("step_index must be parent's + 1");
          tree.nodes_[*n.parent].children.push_back(n.node_id);
        } else {
          if (n.node_id != kRootNode || n.thought.step_index != 0)
            throw std::runtime_error("exactly one root at node 0, step 0");
        }
        tree.nodes_.push_back(std::move(n));
      } catch (const MalformedInput&) {
        throw;
      } catch (const std::exception& e) {
        throw MalformedInput(std::string("bad node record: ") + e.what(), rec.second);
      }
      offset = rec.second + rec.first->size() + 1;
    }
    if (tree.nodes_.empty()) throw MalformedInput("tree stream has no nodes", offset);
    return tree;
  }

  bool structurally_equal(const ReasoningTree& other) const {
    return problem_ == other.problem_ && nodes_ == other.nodes_;
  }

  /// Nodes with more than one child, i.e. the steps where correction branches
  /// forked off. Returned in creation order.
  std::vector<NodeId> branch_points() const {
    std::vector<NodeId> out;
    for (const TreeNode& n : nodes_)
      if (n.children.size() > 1) out.push_back(n.node_id);
    return out;
  }

 private:
  static std::string strip_delimiters(std::string_view text) {
    static constexpr std::string_view kDelim = "</thought>";
    std::string out(text);
    std::size_t pos;
    while ((pos = out.find(kDelim)) != std::string::npos) out.erase(pos, kDelim.size());
    return out;
  }

  void check_step(const Trajectory& traj, int error_step) const {
    int n = static_cast<int>(traj.thought_count());
    if (error_step < 1 || error_step > n)
      throw StepOutOfRange("error step " + std::to_string(error_step) +
                           " outside [1, " + std::to_string(n) + "]");
  }

  // Returns the next newline-terminated (or final) non-empty line plus its
  // starting byte offset; nullopt line when exhausted.
  static std::pair<std::optional<std::string_view>, std::size_t> next_record(std::string_view data,
                                                                             std::size_t offset) {
    while (offset < data.size() && (data[offset] == '\n' || data[offset] == '\r')) ++offset;
    if (offset >= data.size()) return {std::nullopt, offset};
    std::size_t end = data.find('\n', offset);
    if (end == std::string_view::npos) end = data.size();
    return {data.substr(offset, end - offset), offset};
  }

  static nlohmann::json parse_record(std::string_view line, std::size_t offset) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw MalformedInput("invalid JSON record", offset);
    return j;
  }

  Problem problem_;
  std::vector<TreeNode> nodes_;
};

}  // namespace ics
