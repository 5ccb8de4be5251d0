#include "hypbbm/yule.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

#include <json.hpp>

#include "hypbbm/error.hpp"
#include "hypbbm/random.hpp"

namespace hypbbm {

NodeAddress::NodeAddress(std::string_view word) : word_(word) {
  for (char ch : word_) {
    if (ch != 'L' && ch != 'R') throw DomainError("node address letters must be L or R");
  }
}

NodeAddress NodeAddress::ancestor() {
  NodeAddress a;
  a.ancestor_ = true;
  return a;
}

NodeAddress NodeAddress::child(Side side) const {
  if (ancestor_) return root();
  NodeAddress c = *this;
  c.word_.push_back(side == Side::Left ? 'L' : 'R');
  return c;
}

NodeAddress NodeAddress::parent() const {
  if (ancestor_) throw DomainError("the ancestor has no parent");
  if (word_.empty()) return ancestor();
  NodeAddress p = *this;
  p.word_.pop_back();
  return p;
}

bool NodeAddress::is_prefix_of(const NodeAddress& other) const noexcept {
  if (ancestor_) return true;
  if (other.ancestor_) return false;
  return other.word_.starts_with(word_);
}

NodeAddress NodeAddress::suffix_after(std::size_t n) const {
  if (ancestor_ || n > word_.size()) throw DomainError("suffix past end of address");
  return NodeAddress(std::string_view(word_).substr(n));
}

NodeAddress confluent(const NodeAddress& a, const NodeAddress& b) {
  if (a.is_ancestor() || b.is_ancestor()) return NodeAddress::ancestor();
  const auto& x = a.word();
  const auto& y = b.word();
  std::size_t n = 0;
  while (n < x.size() && n < y.size() && x[n] == y[n]) ++n;
  return NodeAddress(std::string_view(x).substr(0, n));
}

YuleTree::YuleTree(double lambda, double horizon, std::vector<YuleVertex> vertices)
    : lambda_(lambda), horizon_(horizon), vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw DomainError("a Yule tree has at least its root");
}

double YuleTree::edge_start(std::size_t i) const {
  const auto& v = vertices_.at(i);
  return v.parent == YuleVertex::kNone ? 0.0 : vertices_[static_cast<std::size_t>(v.parent)].birth;
}

NodeAddress YuleTree::address(std::size_t i) const {
  std::string word;
  auto cur = static_cast<std::int32_t>(i);
  while (vertices_.at(static_cast<std::size_t>(cur)).parent != YuleVertex::kNone) {
    const auto parent = vertices_[static_cast<std::size_t>(cur)].parent;
    word.push_back(vertices_[static_cast<std::size_t>(parent)].left == cur ? 'L' : 'R');
    cur = parent;
  }
  return NodeAddress(std::string(word.rbegin(), word.rend()));
}

std::optional<std::size_t> YuleTree::find(const NodeAddress& a) const {
  if (a.is_ancestor()) return std::nullopt;
  std::int32_t cur = 0;
  for (char ch : a.word()) {
    const auto& v = vertices_[static_cast<std::size_t>(cur)];
    cur = ch == 'L' ? v.left : v.right;
    if (cur == YuleVertex::kNone) return std::nullopt;
  }
  return static_cast<std::size_t>(cur);
}

std::uint64_t root_key(std::uint64_t seed) noexcept { return derive_key(seed, 0x5eed); }

std::uint64_t child_key(std::uint64_t parent_key, Side side) noexcept {
  return derive_key(parent_key, side == Side::Left ? 0x4c : 0x52);
}

namespace {

struct Pending {
  std::int32_t parent;
  Side side;
};

// Builds vertices in preorder. make(parent_index, side, parent_vertex) fills
// the new vertex's key and edge length or returns false when absent.
template <typename Make>
std::vector<YuleVertex> grow(double horizon, std::size_t cap, double lambda, Make make) {
  std::vector<YuleVertex> out;
  std::vector<Pending> stack{{YuleVertex::kNone, Side::Left}};
  while (!stack.empty()) {
    const Pending task = stack.back();
    stack.pop_back();
    YuleVertex v;
    v.parent = task.parent;
    double start = 0.0;
    if (task.parent != YuleVertex::kNone) {
      const auto& p = out[static_cast<std::size_t>(task.parent)];
      start = p.birth;
      v.depth = p.depth + 1;
    }
    if (!make(task, out, v)) continue;
    v.birth = start + v.edge_length;
    const auto index = static_cast<std::int32_t>(out.size());
    if (task.parent != YuleVertex::kNone) {
      auto& p = out[static_cast<std::size_t>(task.parent)];
      (task.side == Side::Left ? p.left : p.right) = index;
    }
    out.push_back(v);
    if (out.size() > cap) throw PopulationCapExceeded(cap, lambda, horizon);
    if (v.birth < horizon) {
      stack.push_back({index, Side::Right});
      stack.push_back({index, Side::Left});
    }
  }
  return out;
}

}  // namespace

YuleTree sample_tree(double lambda, double horizon, std::uint64_t seed, std::size_t vertex_cap) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be >= 0");
  const std::uint64_t rkey = root_key(seed);
  auto vertices = grow(horizon, vertex_cap, lambda,
                       [&](const Pending& task, const std::vector<YuleVertex>& built, YuleVertex& v) {
                         v.key = task.parent == YuleVertex::kNone
                                     ? rkey
                                     : child_key(built[static_cast<std::size_t>(task.parent)].key, task.side);
                         RandomStream rs(derive_key(v.key, kEdgeLengthTag));
                         v.edge_length = rs.exponential(lambda);
                         return true;
                       });
  return YuleTree(lambda, horizon, std::move(vertices));
}

CrossSection cross_section(const YuleTree& tree, double t) {
  if (t > tree.horizon()) {
    throw OutOfHorizon("cross-section at t=" + std::to_string(t) + " beyond horizon " +
                       std::to_string(tree.horizon()));
  }
  if (!(t >= 0.0)) throw DomainError("cross-section time must be >= 0");
  CrossSection cs;
  cs.t = t;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const auto& v = tree.vertex(i);
    const double start = tree.edge_start(i);
    if ((start < t || (i == 0 && t == 0.0)) && t <= v.birth) {
      cs.elements.push_back({i, t - start});
    } else if (v.birth < t) {
      stack.push_back(static_cast<std::size_t>(v.right));
      stack.push_back(static_cast<std::size_t>(v.left));
    }
  }
  return cs;
}

double population_pmf(double lambda, double t, std::size_t n) {
  if (n < 1) throw DomainError("population size starts at 1");
  if (!(t >= 0.0) || !(lambda > 0.0)) throw DomainError("need lambda > 0 and t >= 0");
  const double p = std::exp(-lambda * t);
  if (n == 1) return p;
  // (1 - p)^(n - 1) via log1p for small lambda*t
  return p * std::exp(static_cast<double>(n - 1) * std::log1p(-p));
}

MartingaleTrack martingale_track(const YuleTree& tree, const std::vector<double>& grid) {
  MartingaleTrack track;
  track.samples.reserve(grid.size());
  for (double t : grid) {
    const auto n = static_cast<double>(cross_section(tree, t).count());
    track.samples.emplace_back(t, n * std::exp(-tree.lambda() * t));
  }
  return track;
}

YuleTree subtree(const YuleTree& tree, const NodeAddress& u) {
  const auto found = tree.find(u);
  if (!found) throw UnknownAddress("address '" + u.word() + "' is not materialized");
  const double offset = tree.edge_start(*found);
  const std::uint32_t depth0 = tree.vertex(*found).depth;

  // Copy the subtree in preorder, remapping indices.
  std::vector<YuleVertex> out;
  std::vector<std::pair<std::size_t, std::int32_t>> stack{{*found, YuleVertex::kNone}};
  std::vector<Side> sides{Side::Left};
  while (!stack.empty()) {
    const auto [src, new_parent] = stack.back();
    const Side side = sides.back();
    stack.pop_back();
    sides.pop_back();
    YuleVertex v = tree.vertex(src);
    v.parent = new_parent;
    v.left = v.right = YuleVertex::kNone;
    v.depth -= depth0;
    v.birth -= offset;
    const auto index = static_cast<std::int32_t>(out.size());
    if (new_parent != YuleVertex::kNone) {
      auto& p = out[static_cast<std::size_t>(new_parent)];
      (side == Side::Left ? p.left : p.right) = index;
    }
    out.push_back(v);
    const auto& orig = tree.vertex(src);
    if (orig.right != YuleVertex::kNone) {
      stack.emplace_back(static_cast<std::size_t>(orig.right), index);
      sides.push_back(Side::Right);
    }
    if (orig.left != YuleVertex::kNone) {
      stack.emplace_back(static_cast<std::size_t>(orig.left), index);
      sides.push_back(Side::Left);
    }
  }
  return YuleTree(tree.lambda(), tree.horizon() - offset, std::move(out));
}

void write_jsonl(const YuleTree& tree, std::ostream& out) {
  for (std::size_t i = 0; i < tree.size(); ++i) {
    nlohmann::json rec;
    rec["address"] = tree.address(i).word();
    rec["edge_length"] = tree.vertex(i).edge_length;
    out << rec.dump() << '\n';
  }
}

YuleTree read_jsonl(std::istream& in, double lambda, double horizon) {
  std::map<std::string, double> lengths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const std::string word = rec.at("address").get<std::string>();
      NodeAddress check(word);  // validates letters
      lengths[word] = rec.at("edge_length").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  // Rebuild the preorder layout from the recorded addresses. Stream keys are
  // not persisted and are left at 0.
  std::vector<std::string> words;
  auto vertices = grow(horizon, kDefaultVertexCap, lambda,
                       [&](const Pending& task, const std::vector<YuleVertex>&, YuleVertex& v) {
                         std::string word;
                         if (task.parent != YuleVertex::kNone) {
                           word = words[static_cast<std::size_t>(task.parent)] +
                                  (task.side == Side::Left ? 'L' : 'R');
                         }
                         const auto it = lengths.find(word);
                         if (it == lengths.end()) {
                           throw DomainError("tree record missing vertex '" + word + "'");
                         }
                         v.edge_length = it->second;
                         words.push_back(word);
                         return true;
                       });
  if (vertices.size() != lengths.size()) throw DomainError("tree records contain unreachable vertices");
  return YuleTree(lambda, horizon, std::move(vertices));
}

}  // namespace hypbbm
