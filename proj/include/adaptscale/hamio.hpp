#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace adaptscale::hamio {

/// Dense n^4 tensor of two-electron integrals in chemists' notation (ij|kl).
///
/// FCIDUMP files store (ij|kl) = \int phi_i(1) phi_j(1) r12^-1 phi_k(2) phi_l(2);
/// reading them as physicists' <ij|kl> silently corrupts every energy, so the
/// accessor name spells the convention out.
class TwoBodyTensor {
 public:
  TwoBodyTensor() = default;
  explicit TwoBodyTensor(std::size_t n) : n_(n), data_(n * n * n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double chem(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[index(i, j, k, l)];
  }
  /// Writes v into all eight permutation images of (ij|kl).
  void set_symmetric(std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v);
  /// Raw slot write without symmetry completion.
  void set_raw(std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    data_[index(i, j, k, l)] = v;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return ((i * n_ + j) * n_ + k) * n_ + l;
  }
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Active-space Hamiltonian as read from an FCIDUMP file.
struct MolecularProblem {
  std::size_t n_orbitals = 0;
  std::size_t n_alpha = 0;
  std::size_t n_beta = 0;
  int spin_multiplicity_target = 1;  // 2S+1
  double core_energy = 0.0;
  std::vector<double> one_body;  // row-major n x n
  TwoBodyTensor two_body;
  std::string label;

  double h(std::size_t p, std::size_t q) const { return one_body[p * n_orbitals + q]; }
  std::size_t n_electrons() const { return n_alpha + n_beta; }
};

/// Parses FCIDUMP text. Accepts both `&FCI ... &END` and `/`-terminated
/// namelists; ORBSYM and ISYM are read and discarded.
///
/// Every stored integral is expanded to all its permutation images, so files
/// that list only one representative per symmetry class are fine.
MolecularProblem parse_fcidump(std::istream& in);
MolecularProblem parse_fcidump(std::string_view text);
MolecularProblem read_fcidump_file(const std::string& path);

/// Writes one representative per symmetry class with 17 significant digits.
std::string write_fcidump(const MolecularProblem& problem);

/// Largest deviation from the one-body and eight-fold two-body symmetries.
double symmetry_violation(const MolecularProblem& problem);

}  // namespace adaptscale::hamio
