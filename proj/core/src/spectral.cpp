#include "kahler/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kahler {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd as_matrix(const TensorValue& t) {
  const int d = t.dim();
  MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = t(i, j);
  return m;
}

VectorXd as_vector(const TensorValue& t) {
  VectorXd v(t.dim());
  for (int i = 0; i < t.dim(); ++i) v(i) = t(i);
  return v;
}

JetTensor scalar_jets(Jet v) { return JetTensor({}, v.dim(), std::vector<Jet>{std::move(v)}); }

TensorField scaled(double c, const TensorField& f) {
  return TensorField(f.variance(), f.dim(), [c, f](std::span<const double> x, int order) {
    JetTensor t = f.jets(x, order);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= c;
    return t;
  });
}

double operator_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

std::string format_value(std::complex<double> z) {
  std::ostringstream os;
  os.precision(10);
  os << z.real();
  if (std::abs(z.imag()) > 0.0) os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

bool same_point(const ChartPoint& p, const ChartPoint& q) {
  if (p.chart != q.chart || p.x.size() != q.x.size()) return false;
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (std::abs(p.x[i] - q.x[i]) > 1e-12) return false;
  return true;
}

nlohmann::json point_json(const ChartPoint& p) { return {{"chart", p.chart}, {"x", p.x}}; }

/// Matrix polynomial by Horner, ascending coefficients.
MatrixXd evaluate(const std::vector<double>& c, const MatrixXd& L) {
  const auto N = L.rows();
  MatrixXd P = MatrixXd::Zero(N, N);
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    P = P * L;
    P.diagonal().array() += *it;
  }
  return P;
}

}  // namespace

MatrixXd extended_metric(const TensorValue& g) {
  const int d = g.dim();
  MatrixXd G = MatrixXd::Identity(d + 2, d + 2);
  G.bottomRightCorner(d, d) = as_matrix(g);
  return G;
}

MatrixXd extended_complex_structure(const TensorValue& J) {
  const int d = J.dim();
  MatrixXd Jh = MatrixXd::Zero(d + 2, d + 2);
  Jh(0, 1) = 1.0;
  Jh(1, 0) = -1.0;
  Jh.bottomRightCorner(d, d) = as_matrix(J);
  return Jh;
}

ExtendedOperator build_L(const ProlongedState& s, const TensorValue& g, const TensorValue& J,
                         const ChartPoint& x) {
  const int d = g.dim();
  if (s.dim() != d) throw Error(ErrorKind::InvalidInput, "state and metric dimensions differ");
  const MatrixXd gi = as_matrix(inverse_metric(g));
  const VectorXd lam = as_vector(s.lambda);
  const VectorXd lbar = as_vector(bar(s.lambda, J));

  ExtendedOperator L;
  L.base = x;
  L.g = g;
  L.J = J;
  L.matrix = MatrixXd::Zero(d + 2, d + 2);
  L.matrix(0, 0) = s.mu;
  L.matrix(1, 1) = s.mu;
  L.matrix.block(0, 2, 1, d) = lam.transpose();
  L.matrix.block(1, 2, 1, d) = lbar.transpose();
  L.matrix.block(2, 0, d, 1) = gi * lam;
  L.matrix.block(2, 1, d, 1) = gi * lbar;
  L.matrix.bottomRightCorner(d, d) = gi * as_matrix(s.a);
  return L;
}

ExtendedOperator build_L(const TensorField& g, const TensorField& J, const HSolution& sol,
                         const ChartPoint& x) {
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "build_L needs a solution with mu");
  return build_L(state_at(sol, x), g.value(x.x), J.value(x.x), x);
}

ProlongedState triple_from_L(const ExtendedOperator& L) {
  const int d = L.dim() - 2;
  const MatrixXd a = as_matrix(L.g) * L.matrix.bottomRightCorner(d, d);
  ProlongedState s;
  s.a = TensorValue(lower_slots(2), d, 0.0);
  s.lambda = TensorValue(lower_slots(1), d, 0.0);
  for (int i = 0; i < d; ++i) {
    s.lambda(i) = L.matrix(0, 2 + i);
    for (int j = 0; j < d; ++j) s.a(i, j) = a(i, j);
  }
  s.mu = L.matrix(0, 0);
  return s;
}

double self_adjointness_defect(const ExtendedOperator& L) {
  const MatrixXd gl = extended_metric(L.g) * L.matrix;
  return (gl - gl.transpose()).cwiseAbs().maxCoeff();
}

double complex_commutation_defect(const ExtendedOperator& L) {
  const MatrixXd Jh = extended_complex_structure(L.J);
  return (Jh * L.matrix - L.matrix * Jh).cwiseAbs().maxCoeff();
}

nlohmann::json ExtendedOperator::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < matrix.rows(); ++i) {
    std::vector<double> r(matrix.cols());
    for (int j = 0; j < matrix.cols(); ++j) r[j] = matrix(i, j);
    rows.push_back(r);
  }
  Eigen::VectorXcd ev = matrix.eigenvalues();
  std::vector<std::complex<double>> spec(ev.data(), ev.data() + ev.size());
  std::sort(spec.begin(), spec.end(), [](auto p, auto q) {
    return p.real() != q.real() ? p.real() > q.real() : p.imag() > q.imag();
  });
  nlohmann::json spectrum = nlohmann::json::array();
  for (auto z : spec) spectrum.push_back({z.real(), z.imag()});
  return {{"base", point_json(base)},
          {"matrix", rows},
          {"spectrum", spectrum},
          {"minimal_polynomial", minimal_poly(matrix).to_json()}};
}

ProductResult L_product(const ExtendedOperator& L1, const ExtendedOperator& L2, double tol) {
  if (!same_point(L1.base, L2.base)) throw Error(ErrorKind::InvalidInput, "operators live at different points");
  if (L1.dim() != L2.dim()) throw Error(ErrorKind::InvalidInput, "operator sizes differ");
  const int d = L1.dim() - 2;
  ProductResult r;
  r.L = L1;
  r.L.matrix = L1.matrix * L2.matrix;
  r.triple = triple_from_L(r.L);

  // mu Lambda_j + lambda_k A^k_j  vs  M lambda_j + a^k_j Lambda_k
  const MatrixXd swapped = L2.matrix * L1.matrix;
  r.op_eq_linear = (r.L.matrix.block(0, 2, 1, d) - swapped.block(0, 2, 1, d)).cwiseAbs().maxCoeff();
  double orth = 0.0;
  for (int k = 0; k < d; ++k) orth += L1.matrix(2 + k, 0) * L2.matrix(1, 2 + k);
  r.op_eq_orthogonal = std::abs(orth);

  const double scale = std::max(1.0, operator_norm(L1.matrix) * operator_norm(L2.matrix));
  r.closed = r.op_eq_linear <= tol * scale && r.op_eq_orthogonal <= tol * scale;
  if (!r.closed) {
    std::ostringstream os;
    os << "product does not close: op_eq residuals " << r.op_eq_linear << ", " << r.op_eq_orthogonal;
    r.warnings.push_back(os.str());
  }
  return r;
}

HSolution product_solution(const TensorField& g, const TensorField& J, const HSolution& s1,
                           const HSolution& s2) {
  if (!s1.has_mu() || !s2.has_mu()) throw Error(ErrorKind::InvalidInput, "product needs solutions with mu");
  const int d = g.dim();

  // Shared evaluation: (a~, lambda~, mu~) as jets.
  struct Parts {
    JetTensor a, lambda;
    Jet mu;
  };
  auto parts = [=](std::span<const double> x, int order) {
    const JetTensor gj = g.jets(x, order);
    const JetTensor Jj = J.jets(x, order);
    const auto gi = inverse<Jet>(gj.components(), d);
    const JetTensor a = s1.a.jets(x, order), A = s2.a.jets(x, order);
    const JetTensor l = s1.lambda.jets(x, order), L = s2.lambda.jets(x, order);
    const Jet mu = s1.mu.jets(x, order)[0], M = s2.mu.jets(x, order)[0];
    const JetTensor lb = bar(l, Jj), Lb = bar(L, Jj);

    // A^s_j = g^{st} A_tj and Lambda^s = g^{st} Lambda_t
    const auto Aup = matmul<Jet>(gi, A.components(), d);
    std::vector<Jet> Lup;
    for (int s = 0; s < d; ++s) {
      Jet acc = gi[s * d] * L(0);
      for (int t = 1; t < d; ++t) acc += gi[s * d + t] * L(t);
      Lup.push_back(std::move(acc));
    }
    Parts p;
    p.a = JetTensor(lower_slots(2), d, matmul<Jet>(a.components(), Aup, d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) p.a(i, j) += l(i) * L(j) + lb(i) * Lb(j);
    std::vector<Jet> lam;
    for (int i = 0; i < d; ++i) {
      Jet acc = mu * L(i);
      for (int k = 0; k < d; ++k) acc += l(k) * Aup[k * d + i];
      lam.push_back(std::move(acc));
    }
    p.lambda = JetTensor(lower_slots(1), d, std::move(lam));
    p.mu = mu * M;
    for (int k = 0; k < d; ++k) p.mu += l(k) * Lup[k];
    return p;
  };

  HSolution out;
  out.a = TensorField(lower_slots(2), d, [parts](std::span<const double> x, int order) {
    return parts(x, order).a;
  });
  out.lambda = TensorField(lower_slots(1), d, [parts](std::span<const double> x, int order) {
    return parts(x, order).lambda;
  });
  out.mu = TensorField({}, d, [parts](std::span<const double> x, int order) {
    return scalar_jets(parts(x, order).mu);
  });
  const TensorField a = out.a;
  out.lambda_scalar = TensorField({}, d, [g, a, d](std::span<const double> x, int order) {
    const JetTensor gj = g.jets(x, order);
    const auto gi = inverse<Jet>(gj.components(), d);
    const JetTensor aj = a.jets(x, order);
    Jet acc = gi[0] * aj[0];
    for (std::size_t f = 1; f < aj.size(); ++f) acc += gi[f] * aj[f];
    return scalar_jets(0.25 * acc);
  });
  return out;
}

HSolution polynomial_solution(const TensorField& g, const TensorField& J, const HSolution& sol,
                              const std::vector<double>& coefficients) {
  if (coefficients.empty()) throw Error(ErrorKind::InvalidInput, "empty polynomial");
  HSolution power = trivial_solution(g, -1.0);
  HSolution acc = combine(coefficients[0], power, 0.0, power);
  for (std::size_t k = 1; k < coefficients.size(); ++k) {
    power = k == 1 ? sol : product_solution(g, J, power, sol);
    if (coefficients[k] != 0.0) acc = combine(1.0, acc, coefficients[k], power);
  }
  return acc;
}

nlohmann::json MinimalPolynomial::to_json() const {
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& c : clusters)
    cl.push_back({{"value", {c.value.real(), c.value.imag()}},
                  {"multiplicity", c.multiplicity},
                  {"exponent", c.exponent}});
  return {{"coefficients", coefficients}, {"degree", degree()}, {"clusters", cl},
          {"jordan", jordan},             {"ambiguous", ambiguous}, {"warnings", warnings}};
}

MinimalPolynomial minimal_poly(const MatrixXd& L, double tol) {
  if (L.rows() != L.cols() || L.rows() == 0) throw Error(ErrorKind::InvalidInput, "minimal_poly needs a square matrix");
  const auto N = L.rows();
  double scale = operator_norm(L);
  if (!(scale > 0.0)) scale = 1.0;
  const MatrixXd Ln = L / scale;
  const Eigen::VectorXcd ev = Ln.eigenvalues();

  // Single-linkage clustering of the normalized spectrum.
  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      if (std::abs(ev(i) - ev(j)) <= tol) parent[find(i)] = find(j);

  MinimalPolynomial mp;
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(N, -1);
  for (int i = 0; i < N; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }

  const Eigen::MatrixXcd Lc = Ln.cast<std::complex<double>>();
  std::vector<std::complex<double>> centers;
  for (const auto& grp : groups) {
    std::complex<double> c = 0.0;
    for (int i : grp) c += ev(i);
    c /= static_cast<double>(grp.size());
    if (std::abs(c.imag()) <= tol) c = c.real();
    centers.push_back(c);

    EigenCluster cl;
    cl.multiplicity = static_cast<int>(grp.size());
    Eigen::MatrixXcd M = Lc;
    M.diagonal().array() -= c;
    Eigen::MatrixXcd Mp = M;
    for (int e = 1; e <= cl.multiplicity; ++e) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Mp);
      int nullity = 0;
      for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) <= 10.0 * tol) ++nullity;
      if (nullity >= cl.multiplicity || e == cl.multiplicity) {
        cl.exponent = e;
        break;
      }
      Mp = Mp * M;
    }
    cl.value = c * scale;
    mp.clusters.push_back(cl);
  }
  std::vector<std::size_t> order(mp.clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
    const auto a = mp.clusters[p].value, b = mp.clusters[q].value;
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  std::vector<EigenCluster> sorted;
  std::vector<std::complex<double>> sorted_centers;
  for (auto i : order) {
    sorted.push_back(mp.clusters[i]);
    sorted_centers.push_back(centers[i]);
  }
  mp.clusters = std::move(sorted);
  centers = std::move(sorted_centers);

  for (std::size_t p = 0; p < centers.size(); ++p)
    for (std::size_t q = p + 1; q < centers.size(); ++q)
      if (std::abs(centers[p] - centers[q]) < 10.0 * tol) {
        mp.ambiguous = true;
        mp.warnings.push_back("ambiguous clustering: eigenvalue clusters " + format_value(mp.clusters[p].value) +
                              " and " + format_value(mp.clusters[q].value) + " are closer than 10 tol");
      }
  for (const auto& cl : mp.clusters)
    if (cl.exponent > 1) {
      mp.jordan = true;
      mp.warnings.push_back("not diagonalizable: Jordan block of size " + std::to_string(cl.exponent) + " at " +
                            format_value(cl.value));
    }

  std::vector<std::complex<double>> poly{1.0};
  for (const auto& cl : mp.clusters)
    for (int e = 0; e < cl.exponent; ++e) {
      std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= cl.value * poly[k];
      }
      poly = std::move(next);
    }
  double imag = 0.0, mag = 0.0;
  for (auto c : poly) {
    mp.coefficients.push_back(c.real());
    imag = std::max(imag, std::abs(c.imag()));
    mag = std::max(mag, std::abs(c));
  }
  if (imag > 1e-8 * mag) mp.warnings.push_back("minimal polynomial has non-real coefficients; real parts kept");
  return mp;
}

MinimalPolynomial minimal_poly(const ExtendedOperator& L, double tol) { return minimal_poly(L.matrix, tol); }

double polynomial_distance(const MinimalPolynomial& p, const MinimalPolynomial& q) {
  if (p.coefficients.size() != q.coefficients.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t k = 0; k < p.coefficients.size(); ++k)
    m = std::max(m, std::abs(p.coefficients[k] - q.coefficients[k]));
  return m;
}

std::vector<double> projector_polynomial(const MinimalPolynomial& mp, double target) {
  if (mp.clusters.size() < 2) throw Error(ErrorKind::NoProjector, "only one eigenvalue cluster");
  if (mp.ambiguous) throw Error(ErrorKind::NoProjector, mp.warnings.front());
  if (mp.jordan) throw Error(ErrorKind::NoProjector, "operator is not diagonalizable");
  for (const auto& cl : mp.clusters)
    if (cl.value.imag() != 0.0)
      throw Error(ErrorKind::NoProjector, "complex eigenvalue " + format_value(cl.value));

  std::size_t pick = 0;
  for (std::size_t k = 1; k < mp.clusters.size(); ++k)
    if (std::abs(mp.clusters[k].value.real() - target) < std::abs(mp.clusters[pick].value.real() - target))
      pick = k;
  const double c = mp.clusters[pick].value.real();

  std::vector<double> poly{1.0};
  for (std::size_t k = 0; k < mp.clusters.size(); ++k) {
    if (k == pick) continue;
    const double ck = mp.clusters[k].value.real();
    const double s = 1.0 / (c - ck);
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t m = 0; m < poly.size(); ++m) {
      next[m + 1] += s * poly[m];
      next[m] -= s * ck * poly[m];
    }
    poly = std::move(next);
  }
  return poly;
}

ExtendedOperator make_projector(const ExtendedOperator& L, std::optional<double> target, double tol) {
  const MinimalPolynomial mp = minimal_poly(L.matrix, tol);
  const double t = target ? *target : (mp.clusters.empty() ? 0.0 : mp.clusters.front().value.real());
  const std::vector<double> poly = projector_polynomial(mp, t);

  ExtendedOperator P = L;
  P.matrix = evaluate(poly, L.matrix);
  const double defect = (P.matrix * P.matrix - P.matrix).cwiseAbs().maxCoeff();
  if (defect > tol) {
    std::ostringstream os;
    os << "P(L)^2 - P(L) = " << defect;
    throw Error(ErrorKind::InconsistentProjector, os.str());
  }
  return P;
}

nlohmann::json EigenstructureReport::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& [v, c] : multiplicities) m.push_back({{"eigenvalue", v}, {"multiplicity", c}});
  return {{"mu", mu},
          {"regime", regime},
          {"multiplicities", m},
          {"k", k},
          {"matches", matches},
          {"even", even},
          {"eigenspace_angle", eigenspace_angle}};
}

EigenstructureReport eigenstructure_report(const TensorField& g, const TensorField& J, const HSolution& sol,
                                           const ChartPoint& x, double tol) {
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "eigenstructure_report needs a solution with mu");
  const TensorValue gv = g.value(x.x);
  const int d = gv.dim();
  const int n = d / 2;
  const ProlongedState s = state_at(sol, x);

  EigenstructureReport r;
  r.mu = s.mu;
  if (s.mu < -tol || s.mu > 1.0 + tol) {
    std::ostringstream os;
    os << "mu = " << s.mu << " lies outside [0, 1]";
    throw Error(ErrorKind::InconsistentProjector, os.str());
  }
  if (std::abs(s.mu) <= tol) r.regime = "mu=0";
  else if (std::abs(s.mu - 1.0) <= tol) r.regime = "mu=1";
  else r.regime = "interior";

  const MatrixXd gi = as_matrix(inverse_metric(gv));
  const MatrixXd A = gi * as_matrix(s.a);
  Eigen::EigenSolver<MatrixXd> es(A);
  const VectorXd ev = es.eigenvalues().real();
  const MatrixXd V = es.eigenvectors().real();

  const double ctol = 10.0 * tol;
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int p, int q) { return ev(p) > ev(q); });
  for (int i : idx) {
    if (!r.multiplicities.empty() && std::abs(r.multiplicities.back().first - ev(i)) <= ctol)
      ++r.multiplicities.back().second;
    else r.multiplicities.emplace_back(ev(i), 1);
  }
  auto count_near = [&](double v) {
    int c = 0;
    for (int i = 0; i < d; ++i)
      if (std::abs(ev(i) - v) <= ctol) ++c;
    return c;
  };
  for (const auto& m : r.multiplicities) r.even = r.even && m.second % 2 == 0;

  const int n1 = count_near(1.0), n0 = count_near(0.0);
  if (r.regime == "interior") {
    const int nm = count_near(1.0 - s.mu);
    r.k = n1 / 2;
    r.matches = nm == 2 && n1 % 2 == 0 && n1 + n0 + 2 == d && n0 == 2 * n - 2 * r.k - 2;

    const VectorXd lam = as_vector(s.lambda);
    MatrixXd S(d, 2);
    S.col(0) = gi * lam;
    S.col(1) = gi * as_vector(bar(s.lambda, J.value(x.x)));
    std::vector<int> cols;
    for (int i = 0; i < d; ++i)
      if (std::abs(ev(i) - (1.0 - s.mu)) <= ctol) cols.push_back(i);
    if (cols.empty() || S.norm() == 0.0) {
      r.eigenspace_angle = M_PI / 2;
    } else {
      MatrixXd E(d, static_cast<int>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) E.col(static_cast<int>(c)) = V.col(cols[c]);
      const MatrixXd QE = Eigen::HouseholderQR<MatrixXd>(E).householderQ() * MatrixXd::Identity(d, E.cols());
      const MatrixXd QS = Eigen::HouseholderQR<MatrixXd>(S).householderQ() * MatrixXd::Identity(d, 2);
      const VectorXd cosines = Eigen::JacobiSVD<MatrixXd>(QE.transpose() * QS).singularValues();
      const double cmin = std::clamp(cosines(cosines.size() - 1), -1.0, 1.0);
      r.eigenspace_angle = E.cols() == 2 ? std::acos(cmin) : M_PI / 2;
    }
  } else if (r.regime == "mu=1") {
    r.k = n1 / 2;
    r.matches = n1 % 2 == 0 && n1 + n0 == d;
  } else {
    r.k = n1 / 2 - 1;
    r.matches = n1 % 2 == 0 && n1 >= 2 && n1 + n0 == d;
  }
  return r;
}

TensorValue hessian_mu_check(const TensorField& g, const HSolution& sol, const ChartPoint& x) {
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "hessian_mu_check needs a solution with mu");
  const TensorValue h = covariant_derivative(sol.mu, g, x, 2);
  const TensorValue gv = g.value(x.x);
  const TensorValue a = sol.a.value(x.x);
  const double mu = sol.mu.value(x.x)[0];
  return h - 2.0 * a + (2.0 * mu) * gv;
}

NormalizedSystem normalize_to_B_minus_one(const TensorField& g, const HSolution& sol, double B) {
  if (B == 0.0) throw Error(ErrorKind::InvalidInput, "B = 0 cannot be normalized to -1");
  if (!sol.has_mu()) throw Error(ErrorKind::InvalidInput, "normalization needs a solution with mu");
  NormalizedSystem out;
  out.B = B;
  out.g = scaled(-B, g);
  out.sol.a = scaled(-B, sol.a);
  out.sol.lambda = sol.lambda;
  out.sol.lambda_scalar = sol.lambda_scalar;
  out.sol.mu = scaled(-1.0 / B, sol.mu);
  return out;
}

}  // namespace kahler
