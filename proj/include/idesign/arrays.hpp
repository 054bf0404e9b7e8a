#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace idesign {

/// Block dimensions and treatment count. Valid shapes have 2 <= a <= b and t >= 2.
struct Shape {
  int a = 0;
  int b = 0;
  int t = 0;

  int p() const { return a * b; }
  void validate() const;
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A shape normalised to a <= b. `transposed` records that rows and columns
/// were swapped on ingest.
struct IngestedShape {
  Shape shape;
  bool transposed = false;
};

IngestedShape ingest_shape(int a, int b, int t);

/// An a x b grid of treatment labels 1..t.
///
/// Plots are stored in colexicographic order: plot (i, j) (0-based row i,
/// column j) has linear index j * a + i, which matches the ordering of the
/// response vector within a block.
class BlockArray {
 public:
  BlockArray() = default;
  BlockArray(Shape shape, std::vector<int> colex_labels);

  /// Builds from row-major nested rows (the display/JSON layout). The shape
  /// must not be transposed: rows.size() == a, rows[i].size() == b.
  static BlockArray from_rows(Shape shape, const std::vector<std::vector<int>>& rows);

  const Shape& shape() const { return shape_; }
  int at(int row, int col) const { return labels_[static_cast<std::size_t>(col * shape_.a + row)]; }
  int operator[](std::size_t plot) const { return labels_[plot]; }
  std::span<const int> labels() const { return labels_; }
  std::vector<std::vector<int>> rows() const;

  /// Same treatments with rows and columns swapped; the shape becomes (b, a, t).
  BlockArray transposed() const;

  /// Column notation "(c11,c21;c12,c22;...)".
  std::string str() const;

  friend bool operator==(const BlockArray& x, const BlockArray& y) {
    return x.shape_ == y.shape_ && x.labels_ == y.labels_;
  }
  /// Orders by colex label sequence; used for deterministic tie-breaking.
  friend std::strong_ordering operator<=>(const BlockArray& x, const BlockArray& y) {
    return x.labels_ <=> y.labels_;
  }

 private:
  Shape shape_;
  std::vector<int> labels_;
};

struct BlockArrayHash {
  std::size_t operator()(const BlockArray& s) const;
};

/// The result of ingesting an array typed on a possibly transposed shape.
BlockArray ingest_array(int a, int b, int t, const std::vector<std::vector<int>>& rows);

/// Treatment relabelling orbit (symmetric block set) with its canonical
/// representative.
struct Orbit {
  BlockArray representative;
  std::uint64_t size = 0;
};

/// Relabelling that names treatments 1, 2, 3, ... in order of first
/// appearance along the colex plot scan.
BlockArray canonical_form(const BlockArray& s);

/// sigma[m - 1] is the image of treatment m. Throws std::invalid_argument if
/// sigma is not a bijection on 1..t.
BlockArray apply_permutation(const BlockArray& s, std::span<const int> sigma);

/// Every distinct relabelling of s, in increasing colex order. Throws
/// std::length_error when the orbit has more than `limit` members.
std::vector<BlockArray> orbit_members(const BlockArray& s, std::uint64_t limit = 1'000'000);

/// Number of distinct treatments appearing in s.
int distinct_treatments(const BlockArray& s);

/// t! / (t - rho)!, the number of distinct relabellings of s. Throws
/// std::overflow_error when the count exceeds 64 bits.
std::uint64_t orbit_size(const BlockArray& s);
/// orbit_size, or empty when it does not fit in 64 bits.
std::optional<std::uint64_t> orbit_size_if_fits(const BlockArray& s);

/// Sum_{i=1}^{min(t,p)} S(p, i): the number of orbits on a shape. Empty when
/// the count does not fit in 64 bits.
std::optional<std::uint64_t> orbit_count(const Shape& shape);

/// Stirling number of the second kind; empty on 64-bit overflow.
std::optional<std::uint64_t> stirling2(int n, int k);

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::optional<std::uint64_t> count, std::uint64_t budget);
  std::optional<std::uint64_t> count;
  std::uint64_t budget;
};

inline constexpr std::uint64_t kDefaultOrbitBudget = 2'000'000;

/// Streams every orbit exactly once as restricted-growth strings with at
/// most t distinct symbols, in increasing canonical order. Throws
/// BudgetExceeded before emitting anything when the orbit count exceeds
/// `budget`.
void for_each_orbit(const Shape& shape, const std::function<void(const Orbit&)>& visit,
                    std::uint64_t budget = kDefaultOrbitBudget);

std::vector<Orbit> enumerate_orbits(const Shape& shape, std::uint64_t budget = kDefaultOrbitBudget);

/// Replication and adjacency statistics of an array.
///
/// f[k][m - 1] counts treatment m over the full grid (k = 0), without the
/// last column (1), without the first column (2), without the last row (3)
/// and without the first row (4).
struct CountStatistics {
  std::array<std::vector<int>, 5> f;
  std::array<std::array<long, 5>, 5> h{};
  long h1 = 0;  ///< sum_{j=1..4} h^{0,j}
  long h2 = 0;  ///< sum_{i=1..4} h^{i,i}
  long h3 = 0;  ///< sum_{1<=i<j<=4} h^{i,j}
  long z_r1 = 0, z_c1 = 0, z_r2 = 0, z_c2 = 0, z_d1 = 0, z_d2 = 0;
  long z1 = 0;  ///< 2 z_r1 + 2 z_c1
  long z2 = 0;  ///< 2 z_r2 + 2 z_c2 + 4 z_d1 + 4 z_d2
  int rho = 0;
};

CountStatistics count_statistics(const BlockArray& s);

/// Support-set families used by the closed-form optima.
enum class QSet { Q0, Q1, Q2, Q3, Q4, Q1Star, Q2Star, Balanced };

std::string to_string(QSet q);

struct ArrayClassification {
  struct Significant {
    int treatment = 0;
    bool strict = false;
  };
  std::vector<Significant> significant;
  std::vector<bool> connected;  ///< indexed by treatment - 1
  std::array<bool, 5> q{};      ///< membership in Q_0 .. Q_4
  bool q1_star = false;
  bool q2_star = false;
  bool balanced = false;  ///< Q*: max_m f_m - min_m f_m <= 1
  bool in_m = false;      ///< union of Q_0 .. Q_4

  bool member(QSet set) const;
};

ArrayClassification classify_array(const BlockArray& s);

/// Corner plots {(1,1), (1,b), (a,1), (a,b)} (0-based coordinates).
bool is_corner(const Shape& shape, int row, int col);

}  // namespace idesign
