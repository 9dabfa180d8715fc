#pragma once

// Functions, partitions and averages on the cyclic group Z_N. Residues are
// always represented by 0..N-1.

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace apkit {

class CyclicGroup {
 public:
  /// Throws InvalidArgument if modulus < 2, or if require_prime and the
  /// modulus is composite.
  explicit CyclicGroup(std::uint64_t modulus, bool require_prime = false);

  std::uint64_t modulus() const noexcept { return modulus_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(modulus_); }
  bool is_prime() const noexcept { return prime_; }

  std::uint64_t reduce(std::int64_t a) const noexcept;
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const noexcept {
    const std::uint64_t s = a + b;
    return s >= modulus_ ? s - modulus_ : s;
  }

  /// Representative in (-N/2, N/2].
  std::int64_t centered(std::uint64_t residue) const noexcept;

  friend bool operator==(const CyclicGroup& a, const CyclicGroup& b) noexcept {
    return a.modulus_ == b.modulus_;
  }

 private:
  std::uint64_t modulus_;
  bool prime_;
};

/// Dense real-valued function on Z_N. All values are finite.
class GridFunction {
 public:
  GridFunction(CyclicGroup group, std::vector<double> values);

  static GridFunction constant(const CyclicGroup& group, double value);
  static GridFunction indicator(const CyclicGroup& group, std::initializer_list<std::uint64_t> residues);
  static GridFunction indicator(const CyclicGroup& group, std::span<const std::uint64_t> residues);

  const CyclicGroup& group() const noexcept { return group_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::uint64_t x) const noexcept { return values_[x]; }
  std::span<const double> values() const noexcept { return values_; }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(const GridFunction& other);
  GridFunction& operator*=(double scale);

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }

  friend bool operator==(const GridFunction& a, const GridFunction& b) noexcept {
    return a.group_ == b.group_ && a.values_ == b.values_;
  }

 private:
  void require_same_group(const GridFunction& other) const;

  CyclicGroup group_;
  std::vector<double> values_;
};

/// Set of residues stored as a membership mask.
class ResidueSet {
 public:
  explicit ResidueSet(const CyclicGroup& group);
  ResidueSet(const CyclicGroup& group, std::span<const std::uint64_t> members);

  static ResidueSet full(const CyclicGroup& group);

  const CyclicGroup& group() const noexcept { return group_; }
  bool contains(std::uint64_t x) const noexcept { return mask_[x] != 0; }
  void insert(std::uint64_t x);
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  std::vector<std::uint64_t> members() const;

  ResidueSet& operator|=(const ResidueSet& other);
  bool is_subset_of(const ResidueSet& other) const;

  /// 1 - 1_set as a function.
  GridFunction complement_indicator() const;
  GridFunction indicator() const;

  friend bool operator==(const ResidueSet& a, const ResidueSet& b) noexcept {
    return a.group_ == b.group_ && a.mask_ == b.mask_;
  }

 private:
  CyclicGroup group_;
  std::vector<std::uint8_t> mask_;
};

/// Finite sigma-algebra on Z_N, represented by its atoms. Labels are
/// canonical: atom 0 contains residue 0, and atoms are numbered in order of
/// their smallest member.
class SigmaAlgebra {
 public:
  /// Canonicalizes arbitrary labels (any integer per residue).
  static SigmaAlgebra from_labels(const CyclicGroup& group, std::span<const std::int64_t> labels);
  static SigmaAlgebra trivial(const CyclicGroup& group);
  static SigmaAlgebra discrete(const CyclicGroup& group);
  /// Atoms given as explicit residue lists; they must partition Z_N.
  static SigmaAlgebra from_atoms(const CyclicGroup& group,
                                 const std::vector<std::vector<std::uint64_t>>& atoms);

  const CyclicGroup& group() const noexcept { return group_; }
  std::size_t atom_count() const noexcept { return atom_count_; }
  std::uint32_t atom_of(std::uint64_t x) const noexcept { return labels_[x]; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

  /// Every atom of *this lies inside an atom of coarser.
  bool refines(const SigmaAlgebra& coarser) const;

  friend bool operator==(const SigmaAlgebra& a, const SigmaAlgebra& b) noexcept {
    return a.group_ == b.group_ && a.labels_ == b.labels_;
  }

 private:
  SigmaAlgebra(CyclicGroup group, std::vector<std::uint32_t> labels, std::size_t atom_count);

  CyclicGroup group_;
  std::vector<std::uint32_t> labels_;
  std::size_t atom_count_;
};

/// Mean value, exact up to pairwise-summation rounding, with optional
/// seeded-sampling provenance for estimators.
struct EstimatorResult {
  double value = 0.0;
  double std_error = 0.0;  // zero iff exhaustive
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  bool exact() const noexcept { return std_error == 0.0; }
};

double expectation(const GridFunction& f);
double inner_product(const GridFunction& f, const GridFunction& g);

/// E(|f|^q)^{1/q}; q = +infinity gives max |f|. Throws for q < 1.
double lq_norm(const GridFunction& f, double q);

GridFunction conditional_expectation(const GridFunction& f, const SigmaAlgebra& sigma);

/// Common refinement; the empty join is the trivial algebra on group.
SigmaAlgebra join_sigma(const CyclicGroup& group, std::span<const SigmaAlgebra> algebras);
SigmaAlgebra join_sigma(const SigmaAlgebra& a, const SigmaAlgebra& b);

/// Atoms as sorted residue lists, ordered by smallest member.
std::vector<std::vector<std::uint64_t>> atoms_of(const SigmaAlgebra& sigma);

/// E(w * 1_A) for every atom A.
std::vector<double> atom_masses(const GridFunction& weight, const SigmaAlgebra& sigma);

}  // namespace apkit
