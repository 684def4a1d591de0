#pragma once

// Checks for whether eta is determined by the data: time confounding of
// mode pairs (Condition A), separation by sensor pairs (Condition B), the
// grouped rank condition for the space-time design and the per-block
// conditions for the spectral designs.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adinv/aliasing.hpp"
#include "adinv/linalg.hpp"
#include "adinv/spectral.hpp"

namespace adinv {

struct Violation {
  std::string condition;
  Wavenumber k_a{};
  Wavenumber k_b{};
  std::optional<std::pair<Point, Point>> sensors;
  std::string reason;
};

struct BlockCheck {
  Wavenumber q{};
  int d = 0;
  int rows = 0;        ///< equations available for the block
  int rows_needed = 0; ///< equations required (d_q)
  int rank = 0;
  double condition = 0.0;
  bool pass = false;
  std::string reason;
};

struct IdentifiabilityReport {
  std::string check;
  bool verdict = true;
  std::vector<Violation> violations;
  std::vector<std::vector<int>> partition;  ///< gamma-equality groups (canonical indices)
  std::vector<BlockCheck> per_q;

  void add(Violation v) {
    violations.push_back(std::move(v));
    verdict = false;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "check: " << check << "\n";
    os << "verdict: " << (verdict ? "pass" : "fail") << "\n";
    os << "violations: " << violations.size() << "\n";
    for (const auto& v : violations) {
      os << "  - " << v.condition << " (" << v.k_a.k1 << "," << v.k_a.k2 << ") (" << v.k_b.k1
         << "," << v.k_b.k2 << ")";
      if (v.sensors) {
        os << " sensors (" << v.sensors->first.x << "," << v.sensors->first.y << ") ("
           << v.sensors->second.x << "," << v.sensors->second.y << ")";
      }
      if (!v.reason.empty()) os << ": " << v.reason;
      os << "\n";
    }
    if (!partition.empty()) {
      os << "groups: " << partition.size() << "\n";
      for (std::size_t g = 0; g < partition.size(); ++g) {
        os << "  group " << g << " size " << partition[g].size() << "\n";
      }
    }
    if (!per_q.empty()) {
      os << "blocks: " << per_q.size() << "\n";
      for (const auto& b : per_q) {
        os << "  q=(" << b.q.k1 << "," << b.q.k2 << ") d=" << b.d << " rows=" << b.rows
           << " needed=" << b.rows_needed << " rank=" << b.rank << " cond=" << b.condition
           << " " << (b.pass ? "pass" : "fail");
        if (!b.reason.empty()) os << " (" << b.reason << ")";
        os << "\n";
      }
    }
    return os.str();
  }
};

namespace detail {

inline double quad_form(const Eigen::Matrix2d& D, Wavenumber k) {
  const Eigen::Vector2d kv(k.k1, k.k2);
  return kv.dot(D * kv);
}

// Both time signatures coincide: v'(k1-k2) and k1'Dk1 - k2'Dk2 vanish.
inline bool confounded(const PhysicsParams& p, Wavenumber a, Wavenumber b, double tol) {
  const Eigen::Vector2d dk(a.k1 - b.k1, a.k2 - b.k2);
  return std::abs(p.v.dot(dk)) <= tol &&
         std::abs(quad_form(p.D, a) - quad_form(p.D, b)) <= tol;
}

// Nearest-integer membership within tol; returns parity (0 even, 1 odd) or -1.
inline int integer_parity(double x, double tol) {
  const double r = std::round(x);
  if (std::abs(x - r) > tol) return -1;
  const long long n = static_cast<long long>(r);
  return static_cast<int>(((n % 2) + 2) % 2);
}

inline void check_tol(double tol) {
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
}

}  // namespace detail

/// Condition A: no pair of modes shares v'k and k'Dk (within tol).
inline IdentifiabilityReport check_condition_A(const PhysicsParams& params,
                                               const WavenumberSet& K, double tol = 1e-9) {
  detail::check_tol(tol);
  IdentifiabilityReport rep;
  rep.check = "condition-A";
  for (int a = 0; a < K.size(); ++a) {
    for (int b = a + 1; b < K.size(); ++b) {
      if (detail::confounded(params, K[a], K[b], tol)) {
        rep.add({"condition-A", K[a], K[b], std::nullopt, "identical temporal signature"});
      }
    }
  }
  return rep;
}

/// Condition B: every candidate pair is separated by some sensor pair
/// (s, s') for which 2k'(s - s') is neither odd for both modes nor even for
/// both. Candidates default to all mode pairs.
inline IdentifiabilityReport check_condition_B(
    const std::vector<Point>& positions, const WavenumberSet& K, double tol = 1e-9,
    std::optional<std::vector<std::pair<Wavenumber, Wavenumber>>> candidates = std::nullopt) {
  detail::check_tol(tol);
  IdentifiabilityReport rep;
  rep.check = "condition-B";
  std::vector<std::pair<Wavenumber, Wavenumber>> pairs;
  if (candidates) {
    pairs = *candidates;
  } else {
    for (int a = 0; a < K.size(); ++a) {
      for (int b = a + 1; b < K.size(); ++b) pairs.emplace_back(K[a], K[b]);
    }
  }
  for (const auto& [ka, kb] : pairs) {
    bool separated = false;
    for (std::size_t i = 0; i < positions.size() && !separated; ++i) {
      for (std::size_t j = i + 1; j < positions.size() && !separated; ++j) {
        const double dx = positions[i].x - positions[j].x;
        const double dy = positions[i].y - positions[j].y;
        const int pa = detail::integer_parity(2.0 * (ka.k1 * dx + ka.k2 * dy), tol);
        const int pb = detail::integer_parity(2.0 * (kb.k1 * dx + kb.k2 * dy), tol);
        const bool both_odd = pa == 1 && pb == 1;
        const bool both_even = pa == 0 && pb == 0;
        separated = !both_odd && !both_even;
      }
    }
    if (!separated) {
      rep.add({"condition-B", ka, kb, std::nullopt,
               positions.size() < 2 ? "fewer than two sensors" : "no separating sensor pair"});
    }
  }
  return rep;
}

//! Groups canonical mode indices by gamma equality within tol (first-fit).
inline std::vector<std::vector<int>> gamma_groups(const PhysicsParams& params,
                                                  const WavenumberSet& K, double tol) {
  std::vector<std::vector<int>> groups;
  std::vector<cplx> reps;
  for (int j = 0; j < K.size(); ++j) {
    const cplx g = gamma(params, K[j]);
    std::size_t found = groups.size();
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if (std::abs(g - reps[r]) <= tol) {
        found = r;
        break;
      }
    }
    if (found == groups.size()) {
      groups.push_back({j});
      reps.push_back(g);
    } else {
      groups[found].push_back(j);
    }
  }
  return groups;
}

/// Space-time rank condition: with modes grouped by equal gamma into
/// Psi_1..Psi_Nt, requires L > Nt and rank(F restricted to Psi_i) = |Psi_i|.
inline IdentifiabilityReport check_prop2(const PhysicsParams& params, const WavenumberSet& K,
                                         const CMat& F, int L, double tol = 1e-9) {
  detail::check_tol(tol);
  if (F.cols() != K.size()) throw DimensionError("F does not match K");
  IdentifiabilityReport rep;
  rep.check = "prop-2";
  rep.partition = gamma_groups(params, K, tol);
  const int n_groups = static_cast<int>(rep.partition.size());
  if (L <= n_groups) {
    rep.add({"prop-2", {}, {}, std::nullopt,
             "insufficient temporal samples (L=" + std::to_string(L) +
                 " <= " + std::to_string(n_groups) + " groups)"});
  }
  for (const auto& group : rep.partition) {
    CMat Fi(F.rows(), static_cast<Eigen::Index>(group.size()));
    for (std::size_t c = 0; c < group.size(); ++c) Fi.col(static_cast<Eigen::Index>(c)) = F.col(group[c]);
    const int r = numerical_rank(Fi);
    if (r < static_cast<int>(group.size())) {
      const Wavenumber kb = group.size() > 1 ? K[group[1]] : K[group[0]];
      rep.add({"prop-2", K[group[0]], kb, std::nullopt,
               "group of size " + std::to_string(group.size()) + " has sensor rank " +
                   std::to_string(r)});
    }
  }
  return rep;
}

namespace detail {

// Temporal block (g_k(l)) for l = 1..L over the modes of one alias class.
inline CMat temporal_block(const PhysicsParams& params, const std::vector<Wavenumber>& modes,
                           int L) {
  CMat B(L, static_cast<Eigen::Index>(modes.size()));
  for (std::size_t c = 0; c < modes.size(); ++c) {
    const cplx g = gamma(params, modes[c]);
    for (int l = 0; l < L; ++l) {
      B(l, static_cast<Eigen::Index>(c)) = std::exp(g * (static_cast<double>(l) * params.delta));
    }
  }
  return B;
}

}  // namespace detail

/// Per-block condition for the spectral problems: each class K_q needs
/// enough equations (L, or 2L with the shifted second grid) and no pair of
/// its modes may share a temporal signature.
inline IdentifiabilityReport check_prop3(const AliasPartition& part, const PhysicsParams& params,
                                         int L, double tol = 1e-9, bool shifted = false) {
  detail::check_tol(tol);
  if (L < 1) throw ParameterError("L must be positive");
  IdentifiabilityReport rep;
  rep.check = shifted ? "prop-3-shifted" : "prop-3";
  const int rows = shifted ? 2 * L : L;
  for (int b = 0; b < part.size(); ++b) {
    const std::vector<Wavenumber>& modes = part.block(b);
    BlockCheck bc;
    bc.q = part.q(b);
    bc.d = part.d(b);
    bc.rows = rows;
    bc.rows_needed = bc.d;
    const CMat B = detail::temporal_block(params, modes, L);
    bc.rank = numerical_rank(B);
    bc.condition = condition_number(B);
    bc.pass = true;
    if (rows < bc.d) {
      bc.pass = false;
      bc.reason = shifted ? "2L < d_q" : "L < d_q";
      rep.add({rep.check, bc.q, bc.q, std::nullopt, bc.reason});
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
      for (std::size_t j = i + 1; j < modes.size(); ++j) {
        if (detail::confounded(params, modes[i], modes[j], tol)) {
          bc.pass = false;
          if (bc.reason.empty()) bc.reason = "confounded pair";
          rep.add({rep.check, modes[i], modes[j], std::nullopt, "confounded pair in block"});
        }
      }
    }
    rep.per_q.push_back(bc);
  }
  return rep;
}

struct ConditioningEntry {
  Wavenumber q{};
  int d = 0;
  int rows = 0;
  double condition = 0.0;
  bool flagged = false;
};

//! sigma_max / sigma_min of every block; blocks above `threshold` are flagged.
inline std::vector<ConditioningEntry> conditioning_report(const BlockSystem& sys,
                                                          double threshold = 1e8) {
  std::vector<ConditioningEntry> out;
  out.reserve(sys.blocks.size());
  for (const auto& blk : sys.blocks) {
    ConditioningEntry e;
    e.q = blk.q;
    e.d = static_cast<int>(blk.A.cols());
    e.rows = static_cast<int>(blk.A.rows());
    e.condition = condition_number(blk.A);
    e.flagged = !(e.condition <= threshold);
    out.push_back(e);
  }
  return out;
}

}  // namespace adinv
