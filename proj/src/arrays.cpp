#include "idesign/arrays.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace idesign {

void Shape::validate() const {
  if (a < 2) throw std::invalid_argument("shape: a must be at least 2");
  if (b < a) throw std::invalid_argument("shape: expected a <= b (transpose on ingest)");
  if (t < 2) throw std::invalid_argument("shape: t must be at least 2");
  if (static_cast<long>(a) * b > 4096) throw std::invalid_argument("shape: block too large");
}

std::string Shape::str() const {
  return "(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(t) + ")";
}

IngestedShape ingest_shape(int a, int b, int t) {
  IngestedShape out;
  out.transposed = a > b;
  out.shape = out.transposed ? Shape{b, a, t} : Shape{a, b, t};
  out.shape.validate();
  return out;
}

BlockArray::BlockArray(Shape shape, std::vector<int> colex_labels)
    : shape_(shape), labels_(std::move(colex_labels)) {
  if (shape_.a < 1 || shape_.b < 1 || shape_.t < 1) throw std::invalid_argument("block array: bad shape");
  if (labels_.size() != static_cast<std::size_t>(shape_.p())) {
    throw std::invalid_argument("block array: expected " + std::to_string(shape_.p()) + " entries");
  }
  for (const int v : labels_) {
    if (v < 1 || v > shape_.t) {
      throw std::invalid_argument("block array: label " + std::to_string(v) + " outside 1.." +
                                  std::to_string(shape_.t));
    }
  }
}

BlockArray BlockArray::from_rows(Shape shape, const std::vector<std::vector<int>>& rows) {
  if (rows.size() != static_cast<std::size_t>(shape.a)) {
    throw std::invalid_argument("block array: expected " + std::to_string(shape.a) + " rows");
  }
  std::vector<int> labels(static_cast<std::size_t>(shape.p()));
  for (int i = 0; i < shape.a; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row.size() != static_cast<std::size_t>(shape.b)) {
      throw std::invalid_argument("block array: expected " + std::to_string(shape.b) + " columns");
    }
    for (int j = 0; j < shape.b; ++j) labels[static_cast<std::size_t>(j * shape.a + i)] = row[static_cast<std::size_t>(j)];
  }
  return BlockArray(shape, std::move(labels));
}

std::vector<std::vector<int>> BlockArray::rows() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(shape_.a), std::vector<int>(static_cast<std::size_t>(shape_.b)));
  for (int i = 0; i < shape_.a; ++i)
    for (int j = 0; j < shape_.b; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = at(i, j);
  return out;
}

BlockArray BlockArray::transposed() const {
  const Shape ts{shape_.b, shape_.a, shape_.t};
  std::vector<int> labels(labels_.size());
  // new (j, i) holds old (i, j): new linear index i * b + j
  for (int i = 0; i < shape_.a; ++i)
    for (int j = 0; j < shape_.b; ++j) labels[static_cast<std::size_t>(i * shape_.b + j)] = at(i, j);
  return BlockArray(ts, std::move(labels));
}

std::string BlockArray::str() const {
  std::ostringstream os;
  os << '(';
  for (int j = 0; j < shape_.b; ++j) {
    if (j) os << ';';
    for (int i = 0; i < shape_.a; ++i) {
      if (i) os << ',';
      os << at(i, j);
    }
  }
  os << ')';
  return os.str();
}

std::size_t BlockArrayHash::operator()(const BlockArray& s) const {
  std::size_t h = 1469598103934665603ull;
  for (const int v : s.labels()) {
    h ^= static_cast<std::size_t>(v);
    h *= 1099511628211ull;
  }
  return h;
}

BlockArray ingest_array(int a, int b, int t, const std::vector<std::vector<int>>& rows) {
  const BlockArray raw = BlockArray::from_rows(Shape{a, b, t}, rows);
  return a > b ? raw.transposed() : raw;
}

BlockArray canonical_form(const BlockArray& s) {
  std::vector<int> map(static_cast<std::size_t>(s.shape().t) + 1, 0);
  std::vector<int> labels(s.labels().begin(), s.labels().end());
  int next = 0;
  for (auto& v : labels) {
    auto& m = map[static_cast<std::size_t>(v)];
    if (m == 0) m = ++next;
    v = m;
  }
  return BlockArray(s.shape(), std::move(labels));
}

BlockArray apply_permutation(const BlockArray& s, std::span<const int> sigma) {
  const int t = s.shape().t;
  if (sigma.size() != static_cast<std::size_t>(t)) throw std::invalid_argument("permutation: wrong length");
  std::vector<bool> seen(static_cast<std::size_t>(t) + 1, false);
  for (const int v : sigma) {
    if (v < 1 || v > t || seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("permutation: not a bijection on 1..t");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  std::vector<int> labels(s.labels().begin(), s.labels().end());
  for (auto& v : labels) v = sigma[static_cast<std::size_t>(v - 1)];
  return BlockArray(s.shape(), std::move(labels));
}

std::vector<BlockArray> orbit_members(const BlockArray& s, std::uint64_t limit) {
  const std::uint64_t size = orbit_size(s);
  if (size > limit) throw std::length_error("orbit has " + std::to_string(size) + " members, above the limit");
  const BlockArray rep = canonical_form(s);
  const int t = s.shape().t;
  const int rho = distinct_treatments(rep);
  std::vector<int> image(static_cast<std::size_t>(rho));
  std::vector<bool> taken(static_cast<std::size_t>(t) + 1, false);
  std::vector<BlockArray> out;
  out.reserve(static_cast<std::size_t>(size));
  std::vector<int> labels(rep.labels().begin(), rep.labels().end());
  std::function<void(int)> assign = [&](int k) {
    if (k == rho) {
      std::vector<int> l(labels.size());
      for (std::size_t i = 0; i < l.size(); ++i) l[i] = image[static_cast<std::size_t>(labels[i] - 1)];
      out.emplace_back(rep.shape(), std::move(l));
      return;
    }
    for (int v = 1; v <= t; ++v) {
      if (taken[static_cast<std::size_t>(v)]) continue;
      taken[static_cast<std::size_t>(v)] = true;
      image[static_cast<std::size_t>(k)] = v;
      assign(k + 1);
      taken[static_cast<std::size_t>(v)] = false;
    }
  };
  assign(0);
  std::sort(out.begin(), out.end());
  return out;
}

int distinct_treatments(const BlockArray& s) {
  std::vector<bool> seen(static_cast<std::size_t>(s.shape().t) + 1, false);
  int rho = 0;
  for (const int v : s.labels()) {
    if (!seen[static_cast<std::size_t>(v)]) {
      seen[static_cast<std::size_t>(v)] = true;
      ++rho;
    }
  }
  return rho;
}

std::uint64_t orbit_size(const BlockArray& s) {
  const int t = s.shape().t;
  const int rho = distinct_treatments(s);
  std::uint64_t size = 1;
  for (int k = t; k > t - rho; --k) {
    if (size > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(k)) {
      throw std::overflow_error("orbit size exceeds 64 bits");
    }
    size *= static_cast<std::uint64_t>(k);
  }
  return size;
}

std::optional<std::uint64_t> orbit_size_if_fits(const BlockArray& s) {
  try {
    return orbit_size(s);
  } catch (const std::overflow_error&) {
    return std::nullopt;
  }
}

std::optional<std::uint64_t> stirling2(int n, int k) {
  if (n < 0 || k < 0) return 0;
  // S(i, j) = j S(i-1, j) + S(i-1, j-1), saturating.
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<unsigned __int128> row(static_cast<std::size_t>(k) + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::min(i, k); j >= 1; --j) {
      const unsigned __int128 v = static_cast<unsigned __int128>(j) * row[static_cast<std::size_t>(j)] + row[static_cast<std::size_t>(j - 1)];
      row[static_cast<std::size_t>(j)] = v > kMax ? static_cast<unsigned __int128>(kMax) + 1 : v;
    }
    row[0] = 0;
  }
  if (row[static_cast<std::size_t>(k)] > kMax) return std::nullopt;
  return static_cast<std::uint64_t>(row[static_cast<std::size_t>(k)]);
}

std::optional<std::uint64_t> orbit_count(const Shape& shape) {
  unsigned __int128 total = 0;
  for (int i = 1; i <= std::min(shape.t, shape.p()); ++i) {
    const auto s = stirling2(shape.p(), i);
    if (!s) return std::nullopt;
    total += *s;
    if (total > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(total);
}

BudgetExceeded::BudgetExceeded(std::optional<std::uint64_t> c, std::uint64_t b)
    : std::runtime_error("orbit enumeration refused: " +
                         (c ? std::to_string(*c) : std::string("more than 2^64")) +
                         " orbits exceed the budget of " + std::to_string(b) + "; supply a sampled pool"),
      count(c),
      budget(b) {}

void for_each_orbit(const Shape& shape, const std::function<void(const Orbit&)>& visit,
                    std::uint64_t budget) {
  const auto count = orbit_count(shape);
  if (!count || *count > budget) throw BudgetExceeded(count, budget);
  const int p = shape.p();
  const int t = shape.t;
  // g: restricted-growth string (0-based labels); pmax[i] = max(g[0..i]).
  std::vector<int> g(static_cast<std::size_t>(p), 0);
  std::vector<int> pmax(static_cast<std::size_t>(p), 0);
  std::vector<int> labels(static_cast<std::size_t>(p));
  while (true) {
    for (int i = 0; i < p; ++i) labels[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] + 1;
    const int rho = pmax[static_cast<std::size_t>(p - 1)] + 1;
    Orbit orbit;
    orbit.representative = BlockArray(shape, labels);
    std::uint64_t size = 1;
    for (int k = t; k > t - rho; --k) size *= static_cast<std::uint64_t>(k);
    orbit.size = size;
    visit(orbit);
    int i = p - 1;
    for (; i >= 1; --i) {
      const int limit = std::min(t - 1, pmax[static_cast<std::size_t>(i - 1)] + 1);
      if (g[static_cast<std::size_t>(i)] < limit) break;
    }
    if (i < 1) return;
    ++g[static_cast<std::size_t>(i)];
    pmax[static_cast<std::size_t>(i)] = std::max(pmax[static_cast<std::size_t>(i - 1)], g[static_cast<std::size_t>(i)]);
    for (int k = i + 1; k < p; ++k) {
      g[static_cast<std::size_t>(k)] = 0;
      pmax[static_cast<std::size_t>(k)] = pmax[static_cast<std::size_t>(i)];
    }
  }
}

std::vector<Orbit> enumerate_orbits(const Shape& shape, std::uint64_t budget) {
  std::vector<Orbit> out;
  for_each_orbit(shape, [&](const Orbit& o) { out.push_back(o); }, budget);
  return out;
}

CountStatistics count_statistics(const BlockArray& s) {
  const Shape& sh = s.shape();
  const int a = sh.a;
  const int b = sh.b;
  const auto t = static_cast<std::size_t>(sh.t);
  CountStatistics st;
  for (auto& f : st.f) f.assign(t, 0);
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) {
      const auto m = static_cast<std::size_t>(s.at(i, j) - 1);
      ++st.f[0][m];
      if (j < b - 1) ++st.f[1][m];
      if (j > 0) ++st.f[2][m];
      if (i < a - 1) ++st.f[3][m];
      if (i > 0) ++st.f[4][m];
    }
  }
  for (std::size_t x = 0; x < 5; ++x)
    for (std::size_t y = 0; y < 5; ++y) {
      long v = 0;
      for (std::size_t m = 0; m < t; ++m) v += static_cast<long>(st.f[x][m]) * st.f[y][m];
      st.h[x][y] = v;
    }
  for (std::size_t j = 1; j <= 4; ++j) st.h1 += st.h[0][j];
  for (std::size_t i = 1; i <= 4; ++i) st.h2 += st.h[i][i];
  for (std::size_t i = 1; i <= 4; ++i)
    for (std::size_t j = i + 1; j <= 4; ++j) st.h3 += st.h[i][j];

  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) {
      const int v = s.at(i, j);
      if (j + 1 < b && s.at(i, j + 1) == v) ++st.z_r1;
      if (j + 2 < b && s.at(i, j + 2) == v) ++st.z_r2;
      if (i + 1 < a && s.at(i + 1, j) == v) ++st.z_c1;
      if (i + 2 < a && s.at(i + 2, j) == v) ++st.z_c2;
      if (i >= 1 && j + 1 < b && s.at(i - 1, j + 1) == v) ++st.z_d1;
      if (i + 1 < a && j + 1 < b && s.at(i + 1, j + 1) == v) ++st.z_d2;
    }
  st.z1 = 2 * st.z_r1 + 2 * st.z_c1;
  st.z2 = 2 * st.z_r2 + 2 * st.z_c2 + 4 * st.z_d1 + 4 * st.z_d2;
  st.rho = static_cast<int>(std::count_if(st.f[0].begin(), st.f[0].end(), [](int c) { return c > 0; }));
  return st;
}

std::string to_string(QSet q) {
  switch (q) {
    case QSet::Q0: return "Q0";
    case QSet::Q1: return "Q1";
    case QSet::Q2: return "Q2";
    case QSet::Q3: return "Q3";
    case QSet::Q4: return "Q4";
    case QSet::Q1Star: return "Q1*";
    case QSet::Q2Star: return "Q2*";
    case QSet::Balanced: return "Q*";
  }
  return "?";
}

bool ArrayClassification::member(QSet set) const {
  switch (set) {
    case QSet::Q0: return q[0];
    case QSet::Q1: return q[1];
    case QSet::Q2: return q[2];
    case QSet::Q3: return q[3];
    case QSet::Q4: return q[4];
    case QSet::Q1Star: return q1_star;
    case QSet::Q2Star: return q2_star;
    case QSet::Balanced: return balanced;
  }
  return false;
}

bool is_corner(const Shape& shape, int row, int col) {
  return (row == 0 || row == shape.a - 1) && (col == 0 || col == shape.b - 1);
}

ArrayClassification classify_array(const BlockArray& s) {
  const Shape& sh = s.shape();
  const auto t = static_cast<std::size_t>(sh.t);
  std::vector<std::vector<std::pair<int, int>>> plots(t);
  for (int j = 0; j < sh.b; ++j)
    for (int i = 0; i < sh.a; ++i) plots[static_cast<std::size_t>(s.at(i, j) - 1)].emplace_back(i, j);

  ArrayClassification out;
  out.connected.assign(t, true);
  int doubles = 0;
  int singles = 0;
  int nonsignificant_doubles = 0;
  int min_f = std::numeric_limits<int>::max();
  int max_f = 0;
  for (std::size_t m = 0; m < t; ++m) {
    const auto& pl = plots[m];
    const int f = static_cast<int>(pl.size());
    min_f = std::min(min_f, f);
    max_f = std::max(max_f, f);
    if (f == 1) ++singles;
    if (f == 2) {
      ++doubles;
      const auto [i1, j1] = pl[0];
      const auto [i2, j2] = pl[1];
      const bool adjacent = std::abs(i1 - i2) + std::abs(j1 - j2) == 1;
      const bool c1 = is_corner(sh, i1, j1);
      const bool c2 = is_corner(sh, i2, j2);
      if (adjacent && (c1 || c2)) {
        out.significant.push_back({static_cast<int>(m) + 1, c1 && c2});
      } else {
        ++nonsignificant_doubles;
      }
    }
    if (f > 1) {
      // flood fill over orthogonal adjacency within the treatment's plots
      std::vector<bool> reached(pl.size(), false);
      std::vector<std::size_t> stack{0};
      reached[0] = true;
      while (!stack.empty()) {
        const std::size_t k = stack.back();
        stack.pop_back();
        for (std::size_t l = 0; l < pl.size(); ++l) {
          if (reached[l]) continue;
          if (std::abs(pl[k].first - pl[l].first) + std::abs(pl[k].second - pl[l].second) == 1) {
            reached[l] = true;
            stack.push_back(l);
          }
        }
      }
      out.connected[m] = std::all_of(reached.begin(), reached.end(), [](bool r) { return r; });
    }
  }
  out.balanced = max_f - min_f <= 1;
  const int p = sh.p();
  if (nonsignificant_doubles == 0 && doubles <= 4 && singles == p - 2 * doubles) {
    const auto i = static_cast<std::size_t>(doubles);
    out.q[i] = true;
    out.in_m = true;
    const bool all_strict =
        std::all_of(out.significant.begin(), out.significant.end(), [](const auto& sg) { return sg.strict; });
    out.q1_star = i == 1 && all_strict;
    out.q2_star = i == 2 && all_strict;
  }
  return out;
}

}  // namespace idesign
