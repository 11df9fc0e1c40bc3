#pragma once

// Exact linear algebra on truncated multi-mode Fock spaces.
//
// Basis ordering: a registry (m_0, ..., m_{k-1}) with cutoffs (c_0, ...)
// indexes occupation tuples in mixed radix with the first mode most
// significant, i.e. index = sum_i n_i * prod_{j>i} (c_j + 1). This matches
// the Kronecker order of kron(op_0, op_1, ...).

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace optomag {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using CSparse = Eigen::SparseMatrix<Complex>;

inline constexpr std::size_t kDefaultMaxDimension = std::size_t{1} << 22;

struct Tolerances {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  double norm = 1e-12;
};

struct Mode {
  std::string label;
  int cutoff = 3;

  std::size_t levels() const { return static_cast<std::size_t>(cutoff) + 1; }
  bool operator==(const Mode&) const = default;
};

class ModeRegistry {
 public:
  ModeRegistry() = default;
  explicit ModeRegistry(std::vector<Mode> modes);

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }

  bool contains(std::string_view label) const;
  // Throws DomainError for an unknown label.
  std::size_t position(std::string_view label) const;
  const Mode& mode(std::string_view label) const { return modes_[position(label)]; }

  // Product of (cutoff + 1). Saturates at SIZE_MAX on overflow.
  std::size_t dimension() const;

  // Modes named in `labels`, kept in registry order.
  ModeRegistry subset(std::span<const std::string> labels) const;
  // Modes not named in `labels`, in registry order.
  ModeRegistry complement(std::span<const std::string> labels) const;
  // Concatenation; labels must be disjoint.
  ModeRegistry concat(const ModeRegistry& other) const;

  std::vector<std::string> labels() const;

  bool operator==(const ModeRegistry&) const = default;

 private:
  std::vector<Mode> modes_;
};

// Bijection between occupation tuples and flat indices.
class BasisIndexer {
 public:
  explicit BasisIndexer(const ModeRegistry& registry,
                        std::size_t max_dimension = kDefaultMaxDimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t mode_count() const { return levels_.size(); }
  std::size_t stride(std::size_t mode) const { return strides_[mode]; }
  std::size_t levels(std::size_t mode) const { return levels_[mode]; }

  std::size_t index_of(std::span<const int> occupations) const;
  std::vector<int> tuple_of(std::size_t index) const;
  int occupation(std::size_t index, std::size_t mode) const {
    return static_cast<int>((index / strides_[mode]) % levels_[mode]);
  }

 private:
  std::vector<std::size_t> levels_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

BasisIndexer build_basis(const ModeRegistry& registry,
                         std::size_t max_dimension = kDefaultMaxDimension);

class MultiModeState {
 public:
  MultiModeState(ModeRegistry registry, CVector amplitudes);

  static MultiModeState vacuum(const ModeRegistry& registry);
  static MultiModeState basis_state(const ModeRegistry& registry,
                                    std::span<const int> occupations);

  const ModeRegistry& registry() const { return registry_; }
  const CVector& amplitudes() const { return amplitudes_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }

  double squared_norm() const { return amplitudes_.squaredNorm(); }
  // Throws DomainError on a zero (or non-finite) vector.
  MultiModeState normalized() const;
  Complex amplitude(std::span<const int> occupations) const;

  MultiModeState tensor(const MultiModeState& other) const;

 private:
  ModeRegistry registry_;
  CVector amplitudes_;
};

// Density matrices are allowed to be unnormalized: linear pipelines push
// sub-normalized branches (trace = branch probability) through channels.
class DensityOperator {
 public:
  DensityOperator(ModeRegistry registry, CMatrix matrix);

  static DensityOperator from_pure(const MultiModeState& psi);
  static DensityOperator vacuum(const ModeRegistry& registry);

  const ModeRegistry& registry() const { return registry_; }
  const CMatrix& matrix() const { return matrix_; }
  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }

  double trace() const { return matrix_.trace().real(); }
  // Throws ConditioningError when the trace is not positive.
  DensityOperator normalized() const;
  bool is_hermitian(double tolerance) const;
  double min_eigenvalue() const;
  // Diagonal of the matrix (occupation probabilities for a normalized state).
  Eigen::VectorXd populations() const { return matrix_.diagonal().real(); }

  DensityOperator tensor(const DensityOperator& other) const;
  // Appends the given modes in their vacuum state.
  DensityOperator with_vacuum(std::span<const Mode> modes) const;

  DensityOperator operator+(const DensityOperator& other) const;
  DensityOperator operator*(double scale) const;

 private:
  ModeRegistry registry_;
  CMatrix matrix_;
};

class ModeOperator {
 public:
  ModeOperator(ModeRegistry registry, CSparse matrix);

  static ModeOperator identity(const ModeRegistry& registry);

  const ModeRegistry& registry() const { return registry_; }
  const CSparse& matrix() const { return matrix_; }
  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }

  ModeOperator adjoint() const;
  ModeOperator operator*(const ModeOperator& rhs) const;
  ModeOperator operator+(const ModeOperator& rhs) const;
  ModeOperator operator-(const ModeOperator& rhs) const;
  ModeOperator operator*(Complex scale) const;

  // max |(U†U - I)_ij|
  double unitarity_defect() const;

 private:
  ModeRegistry registry_;
  CSparse matrix_;
};

// Lifts `local`, an operator on the listed modes (Kronecker order of
// `labels`), to the full registry.
ModeOperator embed(const ModeRegistry& registry, std::span<const std::string> labels,
                   const CMatrix& local);

CMatrix local_annihilation(int cutoff);

ModeOperator annihilation(const ModeRegistry& registry, std::string_view label);
ModeOperator creation(const ModeRegistry& registry, std::string_view label);
ModeOperator number_operator(const ModeRegistry& registry, std::string_view label);

MultiModeState apply(const ModeOperator& op, const MultiModeState& psi);
// O ρ O†
DensityOperator conjugate(const DensityOperator& rho, const ModeOperator& op);

MultiModeState apply_unitary(const MultiModeState& psi, const ModeOperator& unitary);
DensityOperator apply_unitary(const DensityOperator& rho, const ModeOperator& unitary);
// Σ_k K_k ρ K_k†
DensityOperator apply_kraus(const DensityOperator& rho, std::span<const ModeOperator> kraus);

DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep);
// Tr_traced[(W ⊗ I) ρ] with W diagonal on the traced-out modes. `weights` is
// indexed in the mixed radix of the traced modes (registry order). The
// result is unnormalized; its trace is the probability of the POVM element W.
DensityOperator partial_trace_weighted(const DensityOperator& rho,
                                       std::span<const std::string> keep,
                                       const Eigen::VectorXd& weights);

Complex expectation(const DensityOperator& rho, const ModeOperator& op);
Complex expectation(const MultiModeState& psi, const ModeOperator& op);

double fidelity_with_pure(const DensityOperator& rho, const MultiModeState& psi,
                          const Tolerances& tolerances = {});

double trace_distance(const DensityOperator& a, const DensityOperator& b);

}  // namespace optomag
