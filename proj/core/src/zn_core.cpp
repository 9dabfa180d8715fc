#include "apkit/zn_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "apkit/arith.hpp"
#include "apkit/errors.hpp"
#include "apkit/summation.hpp"

namespace apkit {

// ---------------------------------------------------------------- CyclicGroup

CyclicGroup::CyclicGroup(std::uint64_t modulus, bool require_prime)
    : modulus_(modulus), prime_(false) {
  if (modulus < 2) throw InvalidArgument("cyclic group modulus must be >= 2");
  if (modulus > (std::uint64_t{1} << 62)) throw InvalidArgument("cyclic group modulus too large");
  prime_ = is_prime_64(modulus);
  if (require_prime && !prime_) {
    throw InvalidArgument("modulus " + std::to_string(modulus) + " is not prime");
  }
}

std::uint64_t CyclicGroup::reduce(std::int64_t a) const noexcept {
  const auto m = static_cast<std::int64_t>(modulus_);
  std::int64_t r = a % m;
  if (r < 0) r += m;
  return static_cast<std::uint64_t>(r);
}

std::int64_t CyclicGroup::centered(std::uint64_t residue) const noexcept {
  const auto r = static_cast<std::int64_t>(residue % modulus_);
  const auto m = static_cast<std::int64_t>(modulus_);
  return 2 * r > m ? r - m : r;
}

// --------------------------------------------------------------- GridFunction

GridFunction::GridFunction(CyclicGroup group, std::vector<double> values)
    : group_(group), values_(std::move(values)) {
  if (values_.size() != group_.size()) {
    throw InvalidArgument("grid function has " + std::to_string(values_.size()) +
                          " values but the group has " + std::to_string(group_.size()) + " residues");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("grid function value at residue " + std::to_string(i) + " is not finite");
    }
  }
}

GridFunction GridFunction::constant(const CyclicGroup& group, double value) {
  return GridFunction(group, std::vector<double>(group.size(), value));
}

GridFunction GridFunction::indicator(const CyclicGroup& group,
                                     std::initializer_list<std::uint64_t> residues) {
  return indicator(group, std::span<const std::uint64_t>(residues.begin(), residues.size()));
}

GridFunction GridFunction::indicator(const CyclicGroup& group, std::span<const std::uint64_t> residues) {
  std::vector<double> v(group.size(), 0.0);
  for (auto r : residues) v[r % group.modulus()] = 1.0;
  return GridFunction(group, std::move(v));
}

void GridFunction::require_same_group(const GridFunction& other) const {
  if (!(group_ == other.group_)) throw InvalidArgument("grid functions live on different groups");
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same_group(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same_group(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(const GridFunction& other) {
  require_same_group(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double scale) {
  for (auto& v : values_) v *= scale;
  return *this;
}

// ----------------------------------------------------------------- ResidueSet

ResidueSet::ResidueSet(const CyclicGroup& group) : group_(group), mask_(group.size(), 0) {}

ResidueSet::ResidueSet(const CyclicGroup& group, std::span<const std::uint64_t> members)
    : ResidueSet(group) {
  for (auto m : members) insert(m);
}

ResidueSet ResidueSet::full(const CyclicGroup& group) {
  ResidueSet s(group);
  std::fill(s.mask_.begin(), s.mask_.end(), std::uint8_t{1});
  return s;
}

void ResidueSet::insert(std::uint64_t x) {
  if (x >= group_.modulus()) throw InvalidArgument("residue out of range");
  mask_[x] = 1;
}

std::size_t ResidueSet::count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<std::uint64_t> ResidueSet::members() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

ResidueSet& ResidueSet::operator|=(const ResidueSet& other) {
  if (!(group_ == other.group_)) throw InvalidArgument("residue sets live on different groups");
  for (std::size_t i = 0; i < mask_.size(); ++i) mask_[i] |= other.mask_[i];
  return *this;
}

bool ResidueSet::is_subset_of(const ResidueSet& other) const {
  if (!(group_ == other.group_)) return false;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i] && !other.mask_[i]) return false;
  }
  return true;
}

GridFunction ResidueSet::complement_indicator() const {
  std::vector<double> v(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) v[i] = mask_[i] ? 0.0 : 1.0;
  return GridFunction(group_, std::move(v));
}

GridFunction ResidueSet::indicator() const {
  std::vector<double> v(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) v[i] = mask_[i] ? 1.0 : 0.0;
  return GridFunction(group_, std::move(v));
}

// --------------------------------------------------------------- SigmaAlgebra

SigmaAlgebra::SigmaAlgebra(CyclicGroup group, std::vector<std::uint32_t> labels, std::size_t atom_count)
    : group_(group), labels_(std::move(labels)), atom_count_(atom_count) {}

SigmaAlgebra SigmaAlgebra::from_labels(const CyclicGroup& group, std::span<const std::int64_t> labels) {
  if (labels.size() != group.size()) throw InvalidArgument("label count does not match the group");
  std::unordered_map<std::int64_t, std::uint32_t> canonical;
  canonical.reserve(64);
  std::vector<std::uint32_t> out(labels.size());
  for (std::size_t x = 0; x < labels.size(); ++x) {
    auto [it, inserted] = canonical.try_emplace(labels[x], static_cast<std::uint32_t>(canonical.size()));
    out[x] = it->second;
  }
  const std::size_t count = canonical.size();
  return SigmaAlgebra(group, std::move(out), count);
}

SigmaAlgebra SigmaAlgebra::trivial(const CyclicGroup& group) {
  return SigmaAlgebra(group, std::vector<std::uint32_t>(group.size(), 0), 1);
}

SigmaAlgebra SigmaAlgebra::discrete(const CyclicGroup& group) {
  std::vector<std::uint32_t> labels(group.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i);
  return SigmaAlgebra(group, std::move(labels), group.size());
}

SigmaAlgebra SigmaAlgebra::from_atoms(const CyclicGroup& group,
                                      const std::vector<std::vector<std::uint64_t>>& atoms) {
  std::vector<std::int64_t> labels(group.size(), -1);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    if (atoms[a].empty()) throw InvalidArgument("atoms must be non-empty");
    for (auto x : atoms[a]) {
      if (x >= group.modulus()) throw InvalidArgument("atom member out of range");
      if (labels[x] != -1) throw InvalidArgument("atoms overlap at residue " + std::to_string(x));
      labels[x] = static_cast<std::int64_t>(a);
    }
  }
  for (std::size_t x = 0; x < labels.size(); ++x) {
    if (labels[x] == -1) throw InvalidArgument("atoms do not cover residue " + std::to_string(x));
  }
  return from_labels(group, labels);
}

bool SigmaAlgebra::refines(const SigmaAlgebra& coarser) const {
  if (!(group_ == coarser.group_)) return false;
  std::vector<std::int64_t> parent(atom_count_, -1);
  for (std::size_t x = 0; x < labels_.size(); ++x) {
    auto& p = parent[labels_[x]];
    if (p == -1) {
      p = coarser.labels_[x];
    } else if (p != coarser.labels_[x]) {
      return false;
    }
  }
  return true;
}

// ----------------------------------------------------------------- operations

double expectation(const GridFunction& f) {
  return pairwise_sum(f.values()) / static_cast<double>(f.size());
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  if (!(f.group() == g.group())) throw InvalidArgument("inner product of functions on different groups");
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f[i] * g[i];
  return pairwise_sum(prod) / static_cast<double>(prod.size());
}

double lq_norm(const GridFunction& f, double q) {
  if (std::isinf(q) && q > 0) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(q >= 1.0)) throw InvalidArgument("L^q norm requires q >= 1");
  std::vector<double> powered(f.size());
  for (std::size_t i = 0; i < powered.size(); ++i) {
    const double a = std::abs(f[i]);
    powered[i] = q == 1.0 ? a : (q == 2.0 ? a * a : std::pow(a, q));
  }
  const double mean = pairwise_sum(powered) / static_cast<double>(powered.size());
  if (q == 1.0) return mean;
  if (q == 2.0) return std::sqrt(mean);
  return std::pow(mean, 1.0 / q);
}

namespace {

// Residues grouped by atom (counting sort), offsets[a]..offsets[a+1].
struct AtomBuckets {
  std::vector<std::size_t> offsets;
  std::vector<std::uint64_t> members;
};

AtomBuckets bucket_atoms(const SigmaAlgebra& sigma) {
  AtomBuckets b;
  b.offsets.assign(sigma.atom_count() + 1, 0);
  for (auto label : sigma.labels()) ++b.offsets[label + 1];
  for (std::size_t a = 0; a < sigma.atom_count(); ++a) b.offsets[a + 1] += b.offsets[a];
  b.members.resize(sigma.labels().size());
  std::vector<std::size_t> cursor(b.offsets.begin(), b.offsets.end() - 1);
  for (std::size_t x = 0; x < sigma.labels().size(); ++x) b.members[cursor[sigma.atom_of(x)]++] = x;
  return b;
}

std::vector<double> atom_sums(const GridFunction& f, const AtomBuckets& b) {
  const std::size_t atoms = b.offsets.size() - 1;
  std::vector<double> sums(atoms);
  std::vector<double> scratch;
  for (std::size_t a = 0; a < atoms; ++a) {
    scratch.clear();
    for (std::size_t i = b.offsets[a]; i < b.offsets[a + 1]; ++i) scratch.push_back(f[b.members[i]]);
    sums[a] = pairwise_sum(scratch);
  }
  return sums;
}

}  // namespace

GridFunction conditional_expectation(const GridFunction& f, const SigmaAlgebra& sigma) {
  if (!(f.group() == sigma.group())) throw InvalidArgument("function and sigma-algebra on different groups");
  const auto buckets = bucket_atoms(sigma);
  const auto sums = atom_sums(f, buckets);
  std::vector<double> means(sums.size());
  for (std::size_t a = 0; a < sums.size(); ++a) {
    means[a] = sums[a] / static_cast<double>(buckets.offsets[a + 1] - buckets.offsets[a]);
  }
  std::vector<double> out(f.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = means[sigma.atom_of(x)];
  return GridFunction(f.group(), std::move(out));
}

std::vector<double> atom_masses(const GridFunction& weight, const SigmaAlgebra& sigma) {
  if (!(weight.group() == sigma.group())) throw InvalidArgument("function and sigma-algebra on different groups");
  auto sums = atom_sums(weight, bucket_atoms(sigma));
  for (auto& s : sums) s /= static_cast<double>(weight.size());
  return sums;
}

SigmaAlgebra join_sigma(const SigmaAlgebra& a, const SigmaAlgebra& b) {
  if (!(a.group() == b.group())) throw InvalidArgument("join of sigma-algebras on different groups");
  std::vector<std::int64_t> labels(a.labels().size());
  const auto stride = static_cast<std::int64_t>(b.atom_count());
  for (std::size_t x = 0; x < labels.size(); ++x) {
    labels[x] = static_cast<std::int64_t>(a.atom_of(x)) * stride + b.atom_of(x);
  }
  return SigmaAlgebra::from_labels(a.group(), labels);
}

SigmaAlgebra join_sigma(const CyclicGroup& group, std::span<const SigmaAlgebra> algebras) {
  SigmaAlgebra out = SigmaAlgebra::trivial(group);
  for (const auto& s : algebras) {
    if (!(s.group() == group)) throw InvalidArgument("join of sigma-algebras on different groups");
    out = join_sigma(out, s);
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> atoms_of(const SigmaAlgebra& sigma) {
  std::vector<std::vector<std::uint64_t>> atoms(sigma.atom_count());
  for (std::size_t x = 0; x < sigma.labels().size(); ++x) atoms[sigma.atom_of(x)].push_back(x);
  return atoms;
}

}  // namespace apkit
