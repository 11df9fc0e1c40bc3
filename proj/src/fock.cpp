#include "optomag/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "optomag/errors.hpp"

namespace optomag {

namespace {

void require_same_registry(const ModeRegistry& a, const ModeRegistry& b, const char* what) {
  if (!(a == b)) {
    throw DomainError(std::string(what) + ": registry mismatch");
  }
}

bool contains_label(std::span<const std::string> labels, std::string_view label) {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

// Offsets (in the parent's flat index space) of every basis state of the
// sub-registry formed by `positions`, enumerated in the sub-registry's own
// mixed radix.
std::vector<std::size_t> sub_offsets(const BasisIndexer& parent,
                                     const std::vector<std::size_t>& positions) {
  std::size_t dim = 1;
  for (auto p : positions) dim *= parent.levels(p);
  std::vector<std::size_t> offsets(dim, 0);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    std::size_t rest = idx;
    std::size_t off = 0;
    for (std::size_t k = positions.size(); k-- > 0;) {
      const std::size_t lv = parent.levels(positions[k]);
      off += (rest % lv) * parent.stride(positions[k]);
      rest /= lv;
    }
    offsets[idx] = off;
  }
  return offsets;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModeRegistry

ModeRegistry::ModeRegistry(std::vector<Mode> modes) : modes_(std::move(modes)) {
  std::unordered_set<std::string> seen;
  for (const auto& m : modes_) {
    if (m.label.empty()) throw DomainError("mode label must be nonempty");
    if (m.cutoff < 1) throw DomainError("mode '" + m.label + "': cutoff must be >= 1");
    if (!seen.insert(m.label).second) throw DomainError("duplicate mode label '" + m.label + "'");
  }
}

bool ModeRegistry::contains(std::string_view label) const {
  return std::any_of(modes_.begin(), modes_.end(),
                     [&](const Mode& m) { return m.label == label; });
}

std::size_t ModeRegistry::position(std::string_view label) const {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].label == label) return i;
  }
  throw DomainError("unknown mode label '" + std::string(label) + "'");
}

std::size_t ModeRegistry::dimension() const {
  std::size_t dim = 1;
  for (const auto& m : modes_) {
    if (dim > std::numeric_limits<std::size_t>::max() / m.levels()) {
      return std::numeric_limits<std::size_t>::max();
    }
    dim *= m.levels();
  }
  return dim;
}

ModeRegistry ModeRegistry::subset(std::span<const std::string> labels) const {
  for (const auto& l : labels) position(l);
  std::vector<Mode> kept;
  for (const auto& m : modes_) {
    if (contains_label(labels, m.label)) kept.push_back(m);
  }
  return ModeRegistry(std::move(kept));
}

ModeRegistry ModeRegistry::complement(std::span<const std::string> labels) const {
  for (const auto& l : labels) position(l);
  std::vector<Mode> rest;
  for (const auto& m : modes_) {
    if (!contains_label(labels, m.label)) rest.push_back(m);
  }
  return ModeRegistry(std::move(rest));
}

ModeRegistry ModeRegistry::concat(const ModeRegistry& other) const {
  std::vector<Mode> all = modes_;
  all.insert(all.end(), other.modes_.begin(), other.modes_.end());
  return ModeRegistry(std::move(all));
}

std::vector<std::string> ModeRegistry::labels() const {
  std::vector<std::string> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) out.push_back(m.label);
  return out;
}

// ---------------------------------------------------------------------------
// BasisIndexer

BasisIndexer::BasisIndexer(const ModeRegistry& registry, std::size_t max_dimension) {
  if (registry.empty()) throw DomainError("basis needs at least one mode");
  const std::size_t dim = registry.dimension();
  if (dim > max_dimension) {
    throw TruncationError("basis dimension " +
                          (dim == std::numeric_limits<std::size_t>::max() ? std::string("(overflow)")
                                                                          : std::to_string(dim)) +
                          " exceeds maximum " + std::to_string(max_dimension) +
                          "; reduce cutoffs");
  }
  levels_.resize(registry.size());
  strides_.resize(registry.size());
  std::size_t stride = 1;
  for (std::size_t k = registry.size(); k-- > 0;) {
    levels_[k] = registry[k].levels();
    strides_[k] = stride;
    stride *= levels_[k];
  }
  dimension_ = stride;
}

std::size_t BasisIndexer::index_of(std::span<const int> occupations) const {
  if (occupations.size() != levels_.size()) {
    throw DomainError("occupation tuple has wrong length");
  }
  std::size_t idx = 0;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (occupations[k] < 0 || static_cast<std::size_t>(occupations[k]) >= levels_[k]) {
      throw DomainError("occupation " + std::to_string(occupations[k]) + " outside cutoff");
    }
    idx += static_cast<std::size_t>(occupations[k]) * strides_[k];
  }
  return idx;
}

std::vector<int> BasisIndexer::tuple_of(std::size_t index) const {
  if (index >= dimension_) throw DomainError("basis index out of range");
  std::vector<int> occ(levels_.size());
  for (std::size_t k = 0; k < levels_.size(); ++k) occ[k] = occupation(index, k);
  return occ;
}

BasisIndexer build_basis(const ModeRegistry& registry, std::size_t max_dimension) {
  return BasisIndexer(registry, max_dimension);
}

// ---------------------------------------------------------------------------
// MultiModeState

MultiModeState::MultiModeState(ModeRegistry registry, CVector amplitudes)
    : registry_(std::move(registry)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != registry_.dimension()) {
    throw DomainError("state amplitude vector does not match registry dimension");
  }
}

MultiModeState MultiModeState::vacuum(const ModeRegistry& registry) {
  CVector amps = CVector::Zero(static_cast<Eigen::Index>(BasisIndexer(registry).dimension()));
  amps(0) = 1.0;
  return MultiModeState(registry, std::move(amps));
}

MultiModeState MultiModeState::basis_state(const ModeRegistry& registry,
                                           std::span<const int> occupations) {
  BasisIndexer basis(registry);
  CVector amps = CVector::Zero(static_cast<Eigen::Index>(basis.dimension()));
  amps(static_cast<Eigen::Index>(basis.index_of(occupations))) = 1.0;
  return MultiModeState(registry, std::move(amps));
}

MultiModeState MultiModeState::normalized() const {
  const double n = amplitudes_.norm();
  if (!std::isfinite(n) || n == 0.0) throw DomainError("cannot normalize a zero state");
  return MultiModeState(registry_, amplitudes_ / n);
}

Complex MultiModeState::amplitude(std::span<const int> occupations) const {
  return amplitudes_(static_cast<Eigen::Index>(BasisIndexer(registry_).index_of(occupations)));
}

MultiModeState MultiModeState::tensor(const MultiModeState& other) const {
  ModeRegistry reg = registry_.concat(other.registry_);
  CVector amps = Eigen::kroneckerProduct(amplitudes_, other.amplitudes_).eval();
  return MultiModeState(std::move(reg), std::move(amps));
}

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator::DensityOperator(ModeRegistry registry, CMatrix matrix)
    : registry_(std::move(registry)), matrix_(std::move(matrix)) {
  const auto dim = registry_.dimension();
  if (static_cast<std::size_t>(matrix_.rows()) != dim ||
      static_cast<std::size_t>(matrix_.cols()) != dim) {
    throw DomainError("density matrix does not match registry dimension");
  }
}

DensityOperator DensityOperator::from_pure(const MultiModeState& psi) {
  return DensityOperator(psi.registry(), psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityOperator DensityOperator::vacuum(const ModeRegistry& registry) {
  return from_pure(MultiModeState::vacuum(registry));
}

DensityOperator DensityOperator::normalized() const {
  const double t = trace();
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw ConditioningError("cannot normalize a density operator with trace " + std::to_string(t));
  }
  return DensityOperator(registry_, matrix_ / t);
}

bool DensityOperator::is_hermitian(double tolerance) const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
}

double DensityOperator::min_eigenvalue() const {
  const CMatrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityOperator DensityOperator::tensor(const DensityOperator& other) const {
  ModeRegistry reg = registry_.concat(other.registry_);
  CMatrix m = Eigen::kroneckerProduct(matrix_, other.matrix_).eval();
  return DensityOperator(std::move(reg), std::move(m));
}

DensityOperator DensityOperator::with_vacuum(std::span<const Mode> modes) const {
  return tensor(vacuum(ModeRegistry(std::vector<Mode>(modes.begin(), modes.end()))));
}

DensityOperator DensityOperator::operator+(const DensityOperator& other) const {
  require_same_registry(registry_, other.registry_, "density sum");
  return DensityOperator(registry_, matrix_ + other.matrix_);
}

DensityOperator DensityOperator::operator*(double scale) const {
  return DensityOperator(registry_, matrix_ * scale);
}

// ---------------------------------------------------------------------------
// ModeOperator

ModeOperator::ModeOperator(ModeRegistry registry, CSparse matrix)
    : registry_(std::move(registry)), matrix_(std::move(matrix)) {
  const auto dim = registry_.dimension();
  if (static_cast<std::size_t>(matrix_.rows()) != dim ||
      static_cast<std::size_t>(matrix_.cols()) != dim) {
    throw DomainError("operator does not match registry dimension");
  }
  matrix_.makeCompressed();
}

ModeOperator ModeOperator::identity(const ModeRegistry& registry) {
  const auto dim = static_cast<Eigen::Index>(BasisIndexer(registry).dimension());
  CSparse id(dim, dim);
  id.setIdentity();
  return ModeOperator(registry, std::move(id));
}

ModeOperator ModeOperator::adjoint() const {
  return ModeOperator(registry_, CSparse(matrix_.adjoint()));
}

ModeOperator ModeOperator::operator*(const ModeOperator& rhs) const {
  require_same_registry(registry_, rhs.registry_, "operator product");
  return ModeOperator(registry_, CSparse(matrix_ * rhs.matrix_));
}

ModeOperator ModeOperator::operator+(const ModeOperator& rhs) const {
  require_same_registry(registry_, rhs.registry_, "operator sum");
  return ModeOperator(registry_, CSparse(matrix_ + rhs.matrix_));
}

ModeOperator ModeOperator::operator-(const ModeOperator& rhs) const {
  require_same_registry(registry_, rhs.registry_, "operator difference");
  return ModeOperator(registry_, CSparse(matrix_ - rhs.matrix_));
}

ModeOperator ModeOperator::operator*(Complex scale) const {
  return ModeOperator(registry_, CSparse(matrix_ * scale));
}

double ModeOperator::unitarity_defect() const {
  CSparse id(matrix_.rows(), matrix_.cols());
  id.setIdentity();
  const CSparse defect = matrix_.adjoint() * matrix_ - id;
  double worst = 0.0;
  for (int k = 0; k < defect.outerSize(); ++k) {
    for (CSparse::InnerIterator it(defect, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Operators

ModeOperator embed(const ModeRegistry& registry, std::span<const std::string> labels,
                   const CMatrix& local) {
  if (labels.empty()) throw DomainError("embed: no target modes");
  const BasisIndexer basis(registry);
  std::vector<std::size_t> positions;
  for (const auto& l : labels) {
    const auto p = registry.position(l);
    if (std::find(positions.begin(), positions.end(), p) != positions.end()) {
      throw DomainError("embed: mode '" + l + "' listed twice");
    }
    positions.push_back(p);
  }
  const auto offsets = sub_offsets(basis, positions);
  const auto local_dim = static_cast<Eigen::Index>(offsets.size());
  if (local.rows() != local_dim || local.cols() != local_dim) {
    throw DomainError("embed: local operator has wrong dimension");
  }

  // Nonzeros of the local operator grouped by column.
  std::vector<std::vector<std::pair<Eigen::Index, Complex>>> columns(offsets.size());
  for (Eigen::Index c = 0; c < local_dim; ++c) {
    for (Eigen::Index r = 0; r < local_dim; ++r) {
      if (local(r, c) != Complex(0.0)) columns[static_cast<std::size_t>(c)].emplace_back(r, local(r, c));
    }
  }

  std::vector<Eigen::Triplet<Complex>> triplets;
  const std::size_t dim = basis.dimension();
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t lc = 0;
    for (auto p : positions) lc = lc * basis.levels(p) + static_cast<std::size_t>(basis.occupation(col, p));
    const std::size_t base = col - offsets[lc];
    for (const auto& [r, v] : columns[lc]) {
      triplets.emplace_back(static_cast<Eigen::Index>(base + offsets[static_cast<std::size_t>(r)]),
                            static_cast<Eigen::Index>(col), v);
    }
  }
  CSparse m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return ModeOperator(registry, std::move(m));
}

CMatrix local_annihilation(int cutoff) {
  CMatrix a = CMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

ModeOperator annihilation(const ModeRegistry& registry, std::string_view label) {
  const std::string l(label);
  return embed(registry, std::span(&l, 1), local_annihilation(registry.mode(label).cutoff));
}

ModeOperator creation(const ModeRegistry& registry, std::string_view label) {
  return annihilation(registry, label).adjoint();
}

ModeOperator number_operator(const ModeRegistry& registry, std::string_view label) {
  const int cutoff = registry.mode(label).cutoff;
  CMatrix n = CMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int k = 0; k <= cutoff; ++k) n(k, k) = k;
  const std::string l(label);
  return embed(registry, std::span(&l, 1), n);
}

MultiModeState apply(const ModeOperator& op, const MultiModeState& psi) {
  require_same_registry(op.registry(), psi.registry(), "apply");
  return MultiModeState(psi.registry(), op.matrix() * psi.amplitudes());
}

DensityOperator conjugate(const DensityOperator& rho, const ModeOperator& op) {
  require_same_registry(op.registry(), rho.registry(), "conjugate");
  const CMatrix left = op.matrix() * rho.matrix();
  CMatrix out = left * op.matrix().adjoint();
  return DensityOperator(rho.registry(), std::move(out));
}

MultiModeState apply_unitary(const MultiModeState& psi, const ModeOperator& unitary) {
  return apply(unitary, psi);
}

DensityOperator apply_unitary(const DensityOperator& rho, const ModeOperator& unitary) {
  return conjugate(rho, unitary);
}

DensityOperator apply_kraus(const DensityOperator& rho, std::span<const ModeOperator> kraus) {
  CMatrix acc = CMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& k : kraus) acc += conjugate(rho, k).matrix();
  return DensityOperator(rho.registry(), std::move(acc));
}

DensityOperator partial_trace_weighted(const DensityOperator& rho,
                                       std::span<const std::string> keep,
                                       const Eigen::VectorXd& weights) {
  if (keep.empty()) throw DomainError("partial_trace: keep set is empty");
  const ModeRegistry& reg = rho.registry();
  const ModeRegistry kept = reg.subset(keep);
  const BasisIndexer basis(reg);

  std::vector<std::size_t> keep_pos, trace_pos;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    (contains_label(keep, reg[i].label) ? keep_pos : trace_pos).push_back(i);
  }
  const auto keep_off = sub_offsets(basis, keep_pos);
  const auto trace_off = sub_offsets(basis, trace_pos);
  if (static_cast<std::size_t>(weights.size()) != trace_off.size()) {
    throw DomainError("partial_trace: weight vector does not match traced dimension");
  }

  const auto kd = static_cast<Eigen::Index>(keep_off.size());
  const CMatrix& m = rho.matrix();
  CMatrix out = CMatrix::Zero(kd, kd);
  for (std::size_t t = 0; t < trace_off.size(); ++t) {
    const double w = weights(static_cast<Eigen::Index>(t));
    if (w == 0.0) continue;
    for (Eigen::Index j = 0; j < kd; ++j) {
      const auto col = static_cast<Eigen::Index>(keep_off[static_cast<std::size_t>(j)] + trace_off[t]);
      for (Eigen::Index i = 0; i < kd; ++i) {
        out(i, j) += w * m(static_cast<Eigen::Index>(keep_off[static_cast<std::size_t>(i)] + trace_off[t]), col);
      }
    }
  }
  return DensityOperator(kept, std::move(out));
}

DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep) {
  const ModeRegistry traced = rho.registry().complement(keep);
  const auto td = static_cast<Eigen::Index>(traced.empty() ? 1 : traced.dimension());
  return partial_trace_weighted(rho, keep, Eigen::VectorXd::Ones(td));
}

Complex expectation(const DensityOperator& rho, const ModeOperator& op) {
  require_same_registry(op.registry(), rho.registry(), "expectation");
  // Tr(ρO) = Σ_{r,c} ρ_{c r} O_{r c}
  Complex sum = 0.0;
  const CSparse& o = op.matrix();
  for (int c = 0; c < o.outerSize(); ++c) {
    for (CSparse::InnerIterator it(o, c); it; ++it) sum += rho.matrix()(it.col(), it.row()) * it.value();
  }
  return sum;
}

Complex expectation(const MultiModeState& psi, const ModeOperator& op) {
  require_same_registry(op.registry(), psi.registry(), "expectation");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

double fidelity_with_pure(const DensityOperator& rho, const MultiModeState& psi,
                          const Tolerances& tolerances) {
  require_same_registry(rho.registry(), psi.registry(), "fidelity");
  // The target state must be normalized; the tolerance here is looser than
  // the norm-preservation tolerance because targets are often built from
  // 1/sqrt(2) literals.
  if (std::abs(psi.squared_norm() - 1.0) > std::max(tolerances.norm, 1e-10)) {
    throw DomainError("fidelity: target state is not normalized");
  }
  const double f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes()).real();
  const double slack = tolerances.trace;
  if (f < -slack || f > 1.0 + slack) {
    throw DomainError("fidelity " + std::to_string(f) + " outside [0,1]; is rho normalized?");
  }
  return std::clamp(f, 0.0, 1.0);
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  require_same_registry(a.registry(), b.registry(), "trace distance");
  const CMatrix diff = a.matrix() - b.matrix();
  const CMatrix herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace optomag
