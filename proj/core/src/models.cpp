#include "kahler/models.hpp"

#include <algorithm>
#include <cmath>

namespace kahler {

namespace {

struct CJet {
  Jet re, im;
};

CJet operator+(const CJet& a, const CJet& b) { return {a.re + b.re, a.im + b.im}; }
CJet operator-(const CJet& a, const CJet& b) { return {a.re - b.re, a.im - b.im}; }
CJet operator*(const CJet& a, const CJet& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
CJet operator*(std::complex<double> s, const CJet& a) {
  return {s.real() * a.re - s.imag() * a.im, s.real() * a.im + s.imag() * a.re};
}
CJet conj(const CJet& a) { return {a.re, -a.im}; }
CJet divide(const CJet& a, const CJet& b) {
  const Jet inv = reciprocal(b.re * b.re + b.im * b.im);
  return {(a.re * b.re + a.im * b.im) * inv, (a.im * b.re - a.re * b.im) * inv};
}

/// Homogeneous coordinates from affine chart jets (1 at slot k).
std::vector<CJet> homogeneous(std::span<const Jet> x, int k) {
  const int n = static_cast<int>(x.size()) / 2;
  std::vector<CJet> Z;
  Z.reserve(n + 1);
  const Jet zero = x[0] * 0.0;
  for (int a = 0; a <= n; ++a) {
    if (a == k) {
      Z.push_back({zero + 1.0, zero});
    } else {
      const int j = a < k ? a : a - 1;
      Z.push_back({x[2 * j], x[2 * j + 1]});
    }
  }
  return Z;
}

std::vector<CJet> apply(const ComplexMatrix& M, const std::vector<CJet>& Z) {
  std::vector<CJet> w;
  w.reserve(Z.size());
  for (Eigen::Index a = 0; a < M.rows(); ++a) {
    CJet acc = M(a, 0) * Z[0];
    for (Eigen::Index b = 1; b < M.cols(); ++b) acc = acc + M(a, b) * Z[b];
    w.push_back(std::move(acc));
  }
  return w;
}

std::vector<Jet> affine(const std::vector<CJet>& Z, int k) {
  std::vector<Jet> out;
  out.reserve(2 * (Z.size() - 1));
  for (std::size_t a = 0; a < Z.size(); ++a) {
    if (static_cast<int>(a) == k) continue;
    const CJet q = divide(Z[a], Z[k]);
    out.push_back(q.re);
    out.push_back(q.im);
  }
  return out;
}

ModelChart make_chart(Chart chart, JetMap metric_map, TensorValue J, Box sample_box) {
  const int d = chart.dim();
  TensorField metric = TensorField::closed_form(lower_slots(2), d, metric_map);
  TensorField cs = TensorField::constant(J);
  return ModelChart{std::move(chart), std::move(metric_map), std::move(J), std::move(metric),
                    std::move(cs), std::move(sample_box)};
}

void require_n(int n) {
  if (n < 2) throw Error(ErrorKind::UnsupportedDimension, "complex dimension must be >= 2");
  if (n > 8) throw Error(ErrorKind::UnsupportedDimension, "complex dimension must be <= 8");
}

KahlerModel projective_model(ModelKind kind, const ComplexMatrix& A, int chart_index) {
  const int n = static_cast<int>(A.rows()) - 1;
  require_n(n);
  if (A.cols() != A.rows()) throw Error(ErrorKind::InvalidInput, "A must be square");
  if (chart_index < 0 || chart_index > n) throw Error(ErrorKind::InvalidInput, "chart index out of range");
  Eigen::JacobiSVD<ComplexMatrix> svd(A);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * s(0)) throw Error(ErrorKind::InvalidInput, "A is singular");

  KahlerModel m;
  m.kind = kind;
  m.n = n;
  m.A = A;
  m.primary = chart_index;
  const ComplexMatrix M = A.adjoint() * A;
  const TensorValue J = standard_complex_structure(n);
  for (int k = 0; k <= n; ++k) {
    std::vector<Transition> transitions;
    for (int t = 0; t <= n; ++t)
      if (t != k) transitions.push_back({affine_chart_name(t), projective_map(ComplexMatrix::Identity(n + 1, n + 1), k, t)});
    Chart chart(affine_chart_name(k), 2 * n, Box::cube(2 * n, 2.0), std::move(transitions));
    m.charts.push_back(make_chart(std::move(chart), hermitian_potential_metric(M, k), J, Box::cube(2 * n, 1.0)));
  }
  return m;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Flat: return "flat";
    case ModelKind::FubiniStudy: return "fs";
    case ModelKind::Pullback: return "pullback";
    case ModelKind::Product: return "product";
    case ModelKind::FlatTorus: return "torus";
  }
  return "unknown";
}

std::string affine_chart_name(int k) { return "U" + std::to_string(k); }

TensorValue standard_complex_structure(int n) {
  TensorValue J({Slot::Upper, Slot::Lower}, 2 * n, 0.0);
  for (int k = 0; k < n; ++k) {
    J(2 * k + 1, 2 * k) = 1.0;
    J(2 * k, 2 * k + 1) = -1.0;
  }
  return J;
}

JetMap hermitian_potential_metric(const ComplexMatrix& M, int chart) {
  return [M, chart](std::span<const Jet> x) {
    const int n = static_cast<int>(x.size()) / 2;
    const auto Z = homogeneous(x, chart);
    const auto w = apply(M, Z);
    Jet N = Z[0].re * w[0].re + Z[0].im * w[0].im;
    for (int a = 1; a <= n; ++a) N += Z[a].re * w[a].re + Z[a].im * w[a].im;
    const Jet inv = reciprocal(N);
    const Jet inv2 = inv * inv;
    auto slot = [chart](int j) { return j < chart ? j : j + 1; };

    std::vector<Jet> g(static_cast<std::size_t>(4) * n * n);
    const int d = 2 * n;
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const int sj = slot(j), sl = slot(l);
        // h_{j lbar} = M_{l j} / N - conj(w_j) w_l / N^2
        const CJet cw = conj(w[sj]) * w[sl];
        const Jet re = M(sl, sj).real() * inv - cw.re * inv2;
        const Jet im = M(sl, sj).imag() * inv - cw.im * inv2;
        g[(2 * j) * d + 2 * l] = 4.0 * re;
        g[(2 * j + 1) * d + 2 * l + 1] = 4.0 * re;
        g[(2 * j) * d + 2 * l + 1] = 4.0 * im;
        g[(2 * j + 1) * d + 2 * l] = -4.0 * im;
      }
    return g;
  };
}

JetMap projective_map(const ComplexMatrix& A, int from, int to) {
  return [A, from, to](std::span<const Jet> x) {
    const auto Z = homogeneous(x, from);
    return affine(apply(A, Z), to);
  };
}

TensorField projective_vector_field(const ComplexMatrix& X, int chart) {
  const int n = static_cast<int>(X.rows()) - 1;
  return TensorField::closed_form({Slot::Upper}, 2 * n, [X, chart, n](std::span<const Jet> x) {
    const auto Z = homogeneous(x, chart);
    const auto V = apply(X, Z);
    std::vector<Jet> u;
    u.reserve(2 * n);
    for (int a = 0; a <= n; ++a) {
      if (a == chart) continue;
      const CJet c = V[a] - Z[a] * V[chart];
      u.push_back(c.re);
      u.push_back(c.im);
    }
    return u;
  });
}

Eigen::VectorXcd homogeneous_lift(const ChartPoint& p) {
  if (p.chart.size() < 2 || p.chart[0] != 'U')
    throw Error(ErrorKind::UnsupportedModel, "homogeneous lift needs an affine chart of CP(n)");
  const int k = std::stoi(p.chart.substr(1));
  const int n = static_cast<int>(p.x.size()) / 2;
  Eigen::VectorXcd Z(n + 1);
  for (int a = 0; a <= n; ++a) {
    if (a == k) {
      Z(a) = 1.0;
    } else {
      const int j = a < k ? a : a - 1;
      Z(a) = {p.x[2 * j], p.x[2 * j + 1]};
    }
  }
  return Z;
}

std::vector<double> affine_coordinates(const Eigen::VectorXcd& Z, int chart) {
  std::vector<double> x;
  for (Eigen::Index a = 0; a < Z.size(); ++a) {
    if (a == chart) continue;
    const std::complex<double> q = Z(a) / Z(chart);
    x.push_back(q.real());
    x.push_back(q.imag());
  }
  return x;
}

KahlerModel flat(int n, std::vector<double> signs) {
  require_n(n);
  if (signs.empty()) signs.assign(n, 1.0);
  if (static_cast<int>(signs.size()) != n) throw Error(ErrorKind::InvalidInput, "one sign per complex coordinate");
  for (double s : signs)
    if (s == 0.0) throw Error(ErrorKind::InvalidInput, "zero sign in flat metric");
  KahlerModel m;
  m.kind = ModelKind::Flat;
  m.n = n;
  m.signs = signs;
  const int d = 2 * n;
  JetMap map = [signs, d](std::span<const Jet> x) {
    std::vector<Jet> g(static_cast<std::size_t>(d) * d, x[0] * 0.0);
    for (int i = 0; i < d; ++i) g[i * d + i] += signs[i / 2];
    return g;
  };
  m.charts.push_back(make_chart(Chart("flat", d, Box::cube(d, 10.0)), std::move(map),
                                standard_complex_structure(n), Box::cube(d, 1.0)));
  return m;
}

KahlerModel fubini_study(int n, int chart_index) {
  require_n(n);
  return projective_model(ModelKind::FubiniStudy, ComplexMatrix::Identity(n + 1, n + 1), chart_index);
}

KahlerModel pullback_fs(const ComplexMatrix& A, int chart_index) {
  return projective_model(ModelKind::Pullback, A, chart_index);
}

KahlerModel flat_torus(int n, std::vector<double> periods) {
  require_n(n);
  const int d = 2 * n;
  if (periods.size() == 1) periods.assign(d, periods[0]);
  if (static_cast<int>(periods.size()) != d)
    throw Error(ErrorKind::InvalidInput, "torus needs one period per real coordinate");
  for (double p : periods)
    if (!(p > 0.0)) throw Error(ErrorKind::InvalidInput, "torus periods must be positive");
  KahlerModel m = flat(n);
  m.kind = ModelKind::FlatTorus;
  m.signs.clear();
  m.periods = periods;
  Box domain{std::vector<double>(d), std::vector<double>(d)};
  Box fundamental{std::vector<double>(d, 0.0), periods};
  for (int i = 0; i < d; ++i) {
    domain.lo[i] = -periods[i];
    domain.hi[i] = 2.0 * periods[i];
  }
  auto& c = m.charts[0];
  c.chart = Chart("torus", d, domain);
  c.sample_box = fundamental;
  return m;
}

KahlerModel product_model(std::vector<KahlerModel> factors, std::vector<double> weights) {
  if (factors.size() < 2) throw Error(ErrorKind::InvalidInput, "a product needs at least two factors");
  if (weights.empty()) weights.assign(factors.size(), 1.0);
  if (weights.size() != factors.size()) throw Error(ErrorKind::InvalidInput, "one weight per factor");
  for (double w : weights)
    if (w == 0.0) throw Error(ErrorKind::InvalidInput, "zero product weight");

  KahlerModel m;
  m.kind = ModelKind::Product;
  std::vector<int> offsets;
  std::vector<JetMap> maps;
  Box domain, sample;
  for (const auto& f : factors) {
    offsets.push_back(2 * m.n);
    m.n += f.n;
    const auto& c = f.primary_chart();
    maps.push_back(c.metric_map);
    domain.lo.insert(domain.lo.end(), c.chart.domain().lo.begin(), c.chart.domain().lo.end());
    domain.hi.insert(domain.hi.end(), c.chart.domain().hi.begin(), c.chart.domain().hi.end());
    sample.lo.insert(sample.lo.end(), c.sample_box.lo.begin(), c.sample_box.lo.end());
    sample.hi.insert(sample.hi.end(), c.sample_box.hi.begin(), c.sample_box.hi.end());
  }
  const int d = 2 * m.n;
  if (d > 16) throw Error(ErrorKind::UnsupportedDimension, "product dimension exceeds 16 real coordinates");

  TensorValue J({Slot::Upper, Slot::Lower}, d, 0.0);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto& Jf = factors[f].primary_chart().J;
    const int o = offsets[f];
    for (int i = 0; i < Jf.dim(); ++i)
      for (int j = 0; j < Jf.dim(); ++j) J(o + i, o + j) = Jf(i, j);
  }
  JetMap map = [maps, offsets, weights, d](std::span<const Jet> x) {
    std::vector<Jet> g(static_cast<std::size_t>(d) * d, x[0] * 0.0);
    for (std::size_t f = 0; f < maps.size(); ++f) {
      const int o = offsets[f];
      const int df = (f + 1 < offsets.size() ? offsets[f + 1] : d) - o;
      const auto gf = maps[f](x.subspan(o, df));
      for (int i = 0; i < df; ++i)
        for (int j = 0; j < df; ++j) g[(o + i) * d + o + j] = weights[f] * gf[i * df + j];
    }
    return g;
  };
  m.charts.push_back(make_chart(Chart("product", d, std::move(domain)), std::move(map), std::move(J),
                                std::move(sample)));
  m.factors = std::move(factors);
  m.weights = std::move(weights);
  return m;
}

const ModelChart& KahlerModel::chart(const std::string& name) const { return charts.at(chart_index(name)); }

int KahlerModel::chart_index(const std::string& name) const {
  for (std::size_t i = 0; i < charts.size(); ++i)
    if (charts[i].chart.name() == name) return static_cast<int>(i);
  throw Error(ErrorKind::InvalidInput, "unknown chart " + name);
}

std::vector<ChartPoint> KahlerModel::sample_points(std::mt19937_64& rng, int count, int chart_index) const {
  const auto& c = chart(chart_index < 0 ? primary : chart_index);
  std::vector<ChartPoint> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    ChartPoint p{c.chart.name(), std::vector<double>(dim())};
    for (int i = 0; i < dim(); ++i) {
      std::uniform_real_distribution<double> u(c.sample_box.lo[i], c.sample_box.hi[i]);
      p.x[i] = u(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double depth_score(const Box& b, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = 0.5 * (b.lo[i] + b.hi[i]);
    const double h = 0.5 * (b.hi[i] - b.lo[i]);
    s = std::max(s, std::abs(x[i] - c) / h);
  }
  return s;
}

}  // namespace

ChartPoint KahlerModel::recenter(const ChartPoint& p) const {
  const auto& c = chart(p.chart);
  ChartPoint best = p;
  double score = depth_score(c.chart.domain(), p.x);
  for (const auto& t : c.chart.transitions()) {
    std::vector<double> y;
    try {
      y = c.chart.map_to(t.target, p.x);
    } catch (const Error&) {
      continue;
    }
    const double s = depth_score(chart(t.target).chart.domain(), y);
    if (s < score) {
      score = s;
      best = {t.target, std::move(y)};
    }
  }
  return best;
}

bool KahlerModel::inside(const ChartPoint& p, double margin) const {
  return chart(p.chart).chart.domain().contains(p.x, margin);
}

ComplexMatrix complex_matrix_from_json(const nlohmann::json& j) {
  std::vector<std::complex<double>> entries;
  auto read_entry = [](const nlohmann::json& e) {
    if (e.is_number()) return std::complex<double>(e.get<double>(), 0.0);
    if (e.is_array() && e.size() == 2) return std::complex<double>(e[0].get<double>(), e[1].get<double>());
    throw Error(ErrorKind::Config, "matrix entries must be numbers or [re, im] pairs");
  };
  int rows = 0;
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Config, "matrix must be a non-empty array");
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
    rows = static_cast<int>(j.size());
    for (const auto& row : j) {
      if (static_cast<int>(row.size()) != rows) throw Error(ErrorKind::Config, "matrix must be square");
      for (const auto& e : row) entries.push_back(read_entry(e));
    }
  } else {
    for (const auto& e : j) entries.push_back(read_entry(e));
    rows = static_cast<int>(std::lround(std::sqrt(static_cast<double>(entries.size()))));
    if (rows * rows != static_cast<int>(entries.size())) throw Error(ErrorKind::Config, "matrix must be square");
  }
  ComplexMatrix A(rows, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < rows; ++c) A(r, c) = entries[r * rows + c];
  return A;
}

nlohmann::json complex_matrix_to_json(const ComplexMatrix& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back({A(r, c).real(), A(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json KahlerModel::descriptor() const {
  nlohmann::json j{{"kind", std::string(to_string(kind))}, {"n", n}};
  switch (kind) {
    case ModelKind::Flat: j["signs"] = signs; break;
    case ModelKind::FubiniStudy: j["chart"] = primary; break;
    case ModelKind::Pullback:
      j["chart"] = primary;
      j["A"] = complex_matrix_to_json(A);
      break;
    case ModelKind::FlatTorus: j["periods"] = periods; break;
    case ModelKind::Product: {
      j["factors"] = nlohmann::json::array();
      for (const auto& f : factors) j["factors"].push_back(f.descriptor());
      j["weights"] = weights;
      break;
    }
  }
  return j;
}

KahlerModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw Error(ErrorKind::Config, "model descriptor needs a kind");
  const auto kind = j.at("kind").get<std::string>();
  const int n = j.value("n", 2);
  const int chart = j.value("chart", 0);
  try {
    if (kind == "flat") return flat(n, j.value("signs", std::vector<double>{}));
    if (kind == "fs") return fubini_study(n, chart);
    if (kind == "pullback") return pullback_fs(complex_matrix_from_json(j.at("A")), chart);
    if (kind == "torus") return flat_torus(n, j.value("periods", std::vector<double>{1.0}));
    if (kind == "product") {
      std::vector<KahlerModel> factors;
      for (const auto& f : j.at("factors")) factors.push_back(model_from_json(f));
      return product_model(std::move(factors), j.value("weights", std::vector<double>{}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  throw Error(ErrorKind::Config, "unknown model kind " + kind);
}

}  // namespace kahler
