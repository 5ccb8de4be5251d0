#pragma once

// The Yule tree: a binary genealogy whose edges [v', v] carry i.i.d.
// Exp(lambda) lengths. Vertices are words over {L, R}; the empty word is the
// first fission point and a separate marker stands for the ancestor at
// time 0.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypbbm {

enum class Side : std::uint8_t { Left, Right };

class NodeAddress {
 public:
  /// The empty word, i.e. the first fission point.
  NodeAddress() = default;
  /// Parses a word over {L, R}. Throws DomainError on any other character.
  explicit NodeAddress(std::string_view word);

  static NodeAddress root() { return {}; }
  /// The ancestor sitting at time 0 below the root.
  static NodeAddress ancestor();

  bool is_ancestor() const noexcept { return ancestor_; }
  std::size_t length() const noexcept { return word_.size(); }
  const std::string& word() const noexcept { return word_; }

  NodeAddress child(Side side) const;
  /// Throws DomainError for the ancestor. The root's parent is the ancestor.
  NodeAddress parent() const;
  bool is_prefix_of(const NodeAddress& other) const noexcept;
  /// The word with the first n letters removed.
  NodeAddress suffix_after(std::size_t n) const;

  bool operator==(const NodeAddress&) const = default;
  auto operator<=>(const NodeAddress&) const = default;

 private:
  std::string word_;
  bool ancestor_ = false;
};

/// The furthest vertex shared by the rays through a and b.
NodeAddress confluent(const NodeAddress& a, const NodeAddress& b);

struct YuleVertex {
  static constexpr std::int32_t kNone = -1;

  std::int32_t parent = kNone;  // kNone for the root
  std::int32_t left = kNone;    // kNone when the vertex lies at or past the horizon
  std::int32_t right = kNone;
  std::uint32_t depth = 0;      // word length
  double edge_length = 0.0;     // length of [v', v]
  double birth = 0.0;           // |v| = |v'| + edge_length
  std::uint64_t key = 0;        // random-stream key of the address
};

/// A Yule tree materialized up to a horizon: every vertex whose parent edge
/// starts strictly before the horizon is stored, plus the root. Vertices are
/// kept in depth-first preorder with left children first, which is the
/// lexicographic order of addresses.
class YuleTree {
 public:
  YuleTree(double lambda, double horizon, std::vector<YuleVertex> vertices);

  double lambda() const noexcept { return lambda_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const YuleVertex& vertex(std::size_t i) const { return vertices_.at(i); }
  const std::vector<YuleVertex>& vertices() const noexcept { return vertices_; }

  /// Start time |v'| of the edge ending at vertex i.
  double edge_start(std::size_t i) const;
  NodeAddress address(std::size_t i) const;
  std::optional<std::size_t> find(const NodeAddress& a) const;

 private:
  double lambda_;
  double horizon_;
  std::vector<YuleVertex> vertices_;
};

inline constexpr std::size_t kDefaultVertexCap = 10'000'000;

/// Stream tags under a vertex key.
inline constexpr std::uint64_t kEdgeLengthTag = 1;
inline constexpr std::uint64_t kMotionTag = 2;

/// Key of the root vertex for a run seed.
std::uint64_t root_key(std::uint64_t seed) noexcept;
/// Key of the given child of a vertex with key parent_key.
std::uint64_t child_key(std::uint64_t parent_key, Side side) noexcept;

/// Samples all vertices born before the horizon. Edge lengths depend only
/// on (seed, address). Throws PopulationCapExceeded past vertex_cap.
YuleTree sample_tree(double lambda, double horizon, std::uint64_t seed,
                     std::size_t vertex_cap = kDefaultVertexCap);

struct CrossSectionElement {
  std::size_t vertex;  // edge [v', v] identified by v
  double offset;       // s in [0, edge_length] with |v'| + s = t
};

struct CrossSection {
  double t = 0.0;
  std::vector<CrossSectionElement> elements;

  std::size_t count() const noexcept { return elements.size(); }
};

/// Every tree point at distance t from the ancestor. An edge [v', v] holds
/// time t when |v'| < t <= |v|; at t = 0 only the root edge does.
/// Throws OutOfHorizon for t > horizon.
CrossSection cross_section(const YuleTree& tree, double t);

/// P[N(t) = n] = e^{-lambda t} (1 - e^{-lambda t})^{n - 1}.
double population_pmf(double lambda, double t, std::size_t n);

struct MartingaleTrack {
  std::vector<std::pair<double, double>> samples;  // (t, N(t) e^{-lambda t})
};

MartingaleTrack martingale_track(const YuleTree& tree, const std::vector<double>& grid);

/// The subtree in which u plays the role of the root, re-rooted so that
/// times are measured from |u'|. Throws UnknownAddress.
YuleTree subtree(const YuleTree& tree, const NodeAddress& u);

/// One JSON object per line: {"address": "LR", "edge_length": 0.25}.
void write_jsonl(const YuleTree& tree, std::ostream& out);
YuleTree read_jsonl(std::istream& in, double lambda, double horizon);

}  // namespace hypbbm
