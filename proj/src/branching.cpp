#include "branchlab/branching.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "branchlab/error.hpp"

namespace branchlab {

double decoherence_eps() {
  if (const char* env = std::getenv("BRANCHLAB_EPS")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return 1e-10;
}

namespace {

// Amplitudes smaller than this (squared) are treated as absent when deciding
// which records a measurement must allocate.
constexpr double kNegligibleSq = 1e-28;

using ActivePredicate = std::function<bool(const std::vector<std::size_t>&)>;

CMatrix basis_or_identity(const MeasureSpec& spec, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(k);
  if (spec.basis.size() == 0) return CMatrix::Identity(n, n);
  if (spec.basis.rows() != n || spec.basis.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "measurement basis for '" + spec.system + "' must be " +
                                                std::to_string(k) + "x" + std::to_string(k));
  const double dev = (spec.basis.adjoint() * spec.basis - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (dev > kDefaultTol) throw Error(ErrorCode::NotUnitary, "measurement basis is not orthonormal");
  return spec.basis;
}

void require_ready(const StateVector& s, const std::string& name) {
  const auto m = s.marginal(name);
  for (std::size_t d = 1; d < m.size(); ++d)
    if (m[d] > kNegligibleSq)
      throw Error(ErrorCode::NotReady, "'" + name + "' is not in its ready state");
}

StateVector record(const StateVector& s, const MeasureSpec& spec, const ActivePredicate& active, bool with_x) {
  const Space& sp = s.space();
  const std::size_t ps = sp.position(spec.system);
  const std::size_t pd = sp.position(spec.detector);
  const std::size_t pe = sp.position(spec.env);
  if (ps == pd || ps == pe || pd == pe)
    throw Error(ErrorCode::LabelCollision, "system, detector and environment must be distinct");
  if (spec.leakage < 0.0 || spec.leakage >= 1.0)
    throw Error(ErrorCode::InvalidArgument, "leakage must lie in [0, 1)");

  const std::size_t k_out = sp.factors()[ps].dim;
  const std::size_t det_dim = sp.factors()[pd].dim;
  const std::size_t env_dim = sp.factors()[pe].dim;
  const std::size_t need = k_out + 1 + (with_x ? 1 : 0);
  if (det_dim < need)
    throw Error(ErrorCode::DimensionTooSmall, "detector '" + spec.detector + "' needs " + std::to_string(need) +
                                                  " states, has " + std::to_string(det_dim));
  const CMatrix basis = basis_or_identity(spec, k_out);
  require_ready(s, spec.detector);

  const std::size_t ss = sp.stride(ps);
  const std::size_t sd = sp.stride(pd);
  const std::size_t se = sp.stride(pe);
  const std::size_t slots = k_out + 1;  // slot k_out is the X record
  const std::size_t dim = s.dim();

  // Coefficients in the measurement basis, keyed by the flat index with the
  // system digit zeroed.
  std::vector<cplx> coef(dim * slots, cplx{0.0, 0.0});
  std::vector<cplx> untouched(dim, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < dim; ++i) {
    const cplx a = s[i];
    if (a == cplx{0.0, 0.0}) continue;
    const auto digits = sp.digits(i);
    if (active(digits)) {
      const std::size_t base = i - digits[ps] * ss;
      for (std::size_t k = 0; k < k_out; ++k)
        coef[base * slots + k] += std::conj(basis(static_cast<Eigen::Index>(digits[ps]), static_cast<Eigen::Index>(k))) * a;
    } else {
      untouched[i] = a;
    }
  }

  // Which (old record, slot) pairs need a fresh record.
  std::set<std::pair<std::size_t, std::size_t>> needed;
  for (std::size_t base = 0; base < dim; ++base)
    for (std::size_t k = 0; k < k_out; ++k)
      if (std::norm(coef[base * slots + k]) > kNegligibleSq) needed.emplace((base / se) % env_dim, k);
  for (std::size_t i = 0; i < dim; ++i)
    if (std::norm(untouched[i]) > kNegligibleSq) needed.emplace((i / se) % env_dim, k_out);

  const auto env_marginal = s.marginal(spec.env);
  std::vector<bool> taken(env_dim, false);
  for (std::size_t e = 0; e < env_dim; ++e) taken[e] = env_marginal[e] > kNegligibleSq;
  std::size_t cursor = 0;
  auto allocate = [&]() {
    while (cursor < env_dim && taken[cursor]) ++cursor;
    if (cursor >= env_dim)
      throw Error(ErrorCode::DimensionTooSmall, "environment '" + spec.env + "' has no unused record states left");
    taken[cursor] = true;
    return cursor;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> fresh;
  for (const auto& key : needed) fresh[key] = allocate();
  std::map<std::size_t, std::size_t> shared;
  if (spec.leakage > 0.0)
    for (const auto& [key, rec] : fresh)
      if (key.second < k_out && !shared.count(key.first)) shared[key.first] = allocate();

  const double direct = std::sqrt(1.0 - spec.leakage);
  const double leak = std::sqrt(spec.leakage);
  std::vector<cplx> out(dim, cplx{0.0, 0.0});
  for (std::size_t base = 0; base < dim; ++base) {
    const std::size_t e = (base / se) % env_dim;
    for (std::size_t k = 0; k < k_out; ++k) {
      const cplx c = coef[base * slots + k];
      if (std::norm(c) <= kNegligibleSq) continue;
      const std::size_t moved = base - e * se + (k + 1) * sd;
      const std::size_t f = fresh.at({e, k});
      for (std::size_t sv = 0; sv < k_out; ++sv) {
        const cplx amp = c * basis(static_cast<Eigen::Index>(sv), static_cast<Eigen::Index>(k));
        out[moved + sv * ss + f * se] += direct * amp;
        if (spec.leakage > 0.0) out[moved + sv * ss + shared.at(e) * se] += leak * amp;
      }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (std::norm(untouched[i]) <= kNegligibleSq) continue;
    const std::size_t e = (i / se) % env_dim;
    out[i - e * se + (k_out + 1) * sd + fresh.at({e, k_out}) * se] += untouched[i];
  }
  return StateVector(sp, std::move(out));
}

}  // namespace

StateVector measure(const StateVector& s, const MeasureSpec& spec) {
  return record(s, spec, [](const auto&) { return true; }, false);
}

StateVector conditional_measure(const StateVector& s, const Condition& cond, const MeasureSpec& spec) {
  const Space& sp = s.space();
  const std::size_t pc = sp.position(cond.detector);
  const auto& cdet = sp.factors()[pc];
  const auto want = cdet.find_symbol(cond.outcome);
  if (!want || *want == 0)
    throw Error(ErrorCode::InvalidArgument, "'" + cond.outcome + "' is not an outcome of '" + cond.detector + "'");
  const auto m = s.marginal(cond.detector);
  double recorded = 0.0;
  for (std::size_t d = 1; d < m.size(); ++d) recorded += m[d];
  if (recorded <= kNegligibleSq)
    throw Error(ErrorCode::NoRecord, "condition detector '" + cond.detector + "' has recorded nothing");
  const std::size_t target = *want;
  return record(s, spec, [pc, target](const auto& digits) { return digits[pc] == target; }, true);
}

StateVector apply_wiring(const StateVector& s, const Wiring& w, const std::string& display) {
  const Space& sp = s.space();
  const std::size_t pdisp = sp.position(display);
  const auto src = sp.positions(w.sources);
  for (auto p : src)
    if (p == pdisp) throw Error(ErrorCode::LabelCollision, "display cannot drive itself");
  require_ready(s, display);
  const auto& disp = sp.factors()[pdisp];

  std::map<std::string, std::size_t> targets;
  for (const auto& [key, sym] : w.table) {
    const auto t = disp.find_symbol(sym);
    if (!t) throw Error(ErrorCode::InvalidArgument, "display '" + display + "' has no symbol '" + sym + "'");
    targets[key] = *t;
  }

  const std::size_t sdisp = sp.stride(pdisp);
  std::vector<cplx> out(s.dim(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < s.dim(); ++i) {
    const auto digits = sp.digits(i);
    std::string key;
    for (std::size_t n = 0; n < src.size(); ++n) {
      if (n) key += ',';
      key += sp.factors()[src[n]].symbol(digits[src[n]]);
    }
    const auto it = targets.find(key);
    std::size_t j = i;
    if (it == targets.end()) {
      if (std::norm(s[i]) > kNegligibleSq)
        throw Error(ErrorCode::IncompleteWiring, "no display symbol wired for record '" + key + "'");
    } else {
      // Controlled transposition of the display's ready state and the target symbol.
      const std::size_t d = digits[pdisp];
      const std::size_t t = it->second;
      const std::size_t nd = d == 0 ? t : (d == t ? 0 : d);
      j = i - d * sdisp + nd * sdisp;
    }
    out[j] = s[i];
  }
  return StateVector(sp, std::move(out));
}

std::string join_label(const std::vector<std::string>& label) {
  std::string out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (i) out += ',';
    out += label[i];
  }
  return out;
}

namespace {

std::vector<std::size_t> pointer_indices(const Space& sp, const std::vector<std::size_t>& pp) {
  std::vector<std::size_t> out(sp.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto digits = sp.digits(i);
    std::size_t idx = 0;
    for (auto p : pp) idx = idx * sp.factors()[p].dim + digits[p];
    out[i] = idx;
  }
  return out;
}

}  // namespace

double pointer_coherence(const DensityOperator& rho, std::span<const std::string> pointers) {
  const Space& sp = rho.space();
  const auto pointer_index = pointer_indices(sp, sp.positions(pointers));
  const std::size_t n = sp.dim();
  const auto& m = rho.mat();
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (pointer_index[a] != pointer_index[b])
        worst = std::max(worst, std::abs(m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
  return worst;
}

BranchSet branch_decompose(const DensityOperator& rho, std::span<const std::string> pointers, double eps) {
  const Space& sp = rho.space();
  const auto pp = sp.positions(pointers);
  const std::size_t n = sp.dim();
  std::size_t pointer_dim = 1;
  for (auto p : pp) pointer_dim *= sp.factors()[p].dim;
  const auto pointer_index = pointer_indices(sp, pp);

  const auto& m = rho.mat();
  const double worst = pointer_coherence(rho, pointers);
  if (worst > eps) {
    std::ostringstream msg;
    msg << "off-diagonal pointer block magnitude " << worst << " exceeds eps " << eps;
    throw Error(ErrorCode::NotDecohered, msg.str());
  }

  std::vector<double> weight(pointer_dim, 0.0);
  for (std::size_t a = 0; a < n; ++a) weight[pointer_index[a]] += m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real();

  BranchSet out;
  out.source = "rho[";
  for (std::size_t k = 0; k < sp.size(); ++k) out.source += (k ? "," : "") + sp.factors()[k].name;
  out.source += "]";
  for (std::size_t p = 0; p < pointer_dim; ++p) {
    if (weight[p] < eps) continue;
    CMatrix block = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
      if (pointer_index[a] != p) continue;
      for (std::size_t b = 0; b < n; ++b)
        if (pointer_index[b] == p)
          block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) / weight[p];
    }
    Branch br;
    std::size_t rem = p;
    br.label.resize(pp.size());
    for (std::size_t k = pp.size(); k-- > 0;) {
      const auto& f = sp.factors()[pp[k]];
      br.label[k] = f.symbol(rem % f.dim);
      rem /= f.dim;
    }
    br.weight = weight[p];
    br.block = DensityOperator(sp, std::move(block));
    out.branches.push_back(std::move(br));
  }
  return out;
}

std::vector<Component> components(const StateVector& s, std::span<const std::string> record_labels, double eps) {
  const Space& sp = s.space();
  const auto pr = sp.positions(record_labels);
  std::map<std::vector<std::size_t>, double> weights;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    const double w = std::norm(s[i]);
    if (w == 0.0) continue;
    const auto digits = sp.digits(i);
    std::vector<std::size_t> rec;
    for (auto p : pr) rec.push_back(digits[p]);
    weights[rec] += w;
  }
  std::vector<Component> out;
  for (auto& [rec, w] : weights)
    if (w >= eps) out.push_back({rec, w});
  return out;
}

std::optional<std::string> definite_symbol(const StateVector& s, std::span<const std::string> record_labels,
                                           const Component& c, const std::string& subsystem, double eps) {
  const Space& sp = s.space();
  const auto pr = sp.positions(record_labels);
  const std::size_t ps = sp.position(subsystem);
  std::map<std::size_t, double> by_value;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    const double w = std::norm(s[i]);
    if (w == 0.0) continue;
    const auto digits = sp.digits(i);
    bool match = true;
    for (std::size_t k = 0; k < pr.size() && match; ++k) match = digits[pr[k]] == c.record[k];
    if (match) by_value[digits[ps]] += w;
  }
  std::optional<std::size_t> found;
  for (const auto& [v, w] : by_value) {
    if (w < eps) continue;
    if (found) return std::nullopt;
    found = v;
  }
  if (!found) return std::nullopt;
  return sp.factors()[ps].symbol(*found);
}

}  // namespace branchlab
