#include "copoly/asymptotics.hpp"

#include <cmath>
#include <numbers>

#include "copoly/error.hpp"

namespace copoly {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Localized: return "Localized";
    case Regime::Critical: return "Critical";
    case Regime::Delocalized: return "Delocalized";
  }
  return "?";
}

Regime classify(const SpectralData& s, double eps) {
  if (s.delta > 1.0 + eps) return Regime::Localized;
  if (s.delta < 1.0 - eps) return Regime::Delocalized;
  return Regime::Critical;
}

Matrix resolvent(const KernelBundle& bundle, const SpectralData& s) {
  if (!(s.delta < 1.0 - bundle.tolerances().critical)) {
    fail(ErrorCode::InvalidState, "(1 - B) is singular or not M-matrix unless delta < 1");
  }
  const int T = bundle.T();
  const Matrix A = Matrix::Identity(T, T) - bundle.B();
  Eigen::PartialPivLU<Matrix> lu(A);
  return lu.solve(Matrix::Identity(T, T));
}

RegimeReport constants(const SpectralData& s, const KernelBundle& bundle) {
  const int T = bundle.T();
  const Tolerances& tol = bundle.tolerances();
  RegimeReport rep;
  rep.regime = classify(s, tol.critical);
  rep.delta = s.delta;
  rep.F = s.F;
  rep.mu = s.mu;
  rep.tail_error = bundle.tail_error();
  rep.tol = tol;
  rep.in_P = in_P(bundle.charges(), s.delta, tol);
  const Vector& z = s.zeta;
  const Vector& xi = s.xi;

  switch (rep.regime) {
    case Regime::Localized: {
      rep.Cgt.resize(T);
      rep.Cgt_f.resize(T);
      // sum_t e^{-Ft} G_{eta-[t]}(t) zeta_{eta-[t]}, grouped by start residue.
      std::vector<double> tabulated(T, 0.0);  // indexed by eta
      for (int a = 0; a < T; ++a) {
        for (std::int64_t t = 0; t <= bundle.x_max(); ++t) {
          const int eta = static_cast<int>(mod(a + t, T));
          tabulated[eta] += std::exp(-s.F * static_cast<double>(t)) *
                            bundle.free_tail_weight(a, t) * z(a);
        }
      }
      for (int eta = 0; eta < T; ++eta) {
        double sum = tabulated[eta];
        for (int a = 0; a < T; ++a) {
          sum += bundle.free_tail_weight_tail(a, eta, s.F) * z(a);
        }
        rep.Cgt[eta] = xi(0) * z(eta) * T / s.mu;
        rep.Cgt_f[eta] = xi(0) * (T / s.mu) * sum;
      }
      break;
    }
    case Regime::Critical: {
      const double zLxi = z.dot(bundle.L() * xi);
      rep.Ceq.resize(T);
      rep.Ceq_f.resize(T);
      for (int eta = 0; eta < T; ++eta) {
        rep.Ceq[eta] = T * T / (2.0 * std::numbers::pi) * xi(0) * z(eta) / zLxi;
        rep.Ceq_f[eta] =
            xi(0) * (T / 2.0) * z.dot(bundle.Ltilde().col(eta)) / zLxi;
      }
      break;
    }
    case Regime::Delocalized: {
      const Matrix R = resolvent(bundle, s);
      const Matrix A = Matrix::Identity(T, T) - bundle.B();
      rep.condition = A.cwiseAbs().rowwise().sum().maxCoeff() *
                      R.cwiseAbs().rowwise().sum().maxCoeff();
      const Matrix RLR = R * bundle.L() * R;
      const Matrix RLt = R * bundle.Ltilde();
      rep.Clt.resize(T);
      rep.Clt_f.resize(T);
      for (int eta = 0; eta < T; ++eta) {
        rep.Clt[eta] = RLR(0, eta);
        rep.Clt_f[eta] = RLt(0, eta);
      }
      break;
    }
  }
  return rep;
}

ConvergenceTable verify_asymptotics(const RegimeReport& report,
                                    const PartitionTable& table, int eta,
                                    const std::vector<std::int64_t>& N_list,
                                    Endpoint endpoint) {
  const int T = table.T();
  require(eta >= 0 && eta < T, "eta out of range");
  ConvergenceTable out;
  out.endpoint = endpoint;
  out.eta = eta;
  const bool free = endpoint == Endpoint::Free;
  double prev_gap = kInf;
  for (std::int64_t N : N_list) {
    require(N >= 1 && N <= table.N(), "N outside the table horizon");
    require(mod(N, T) == eta, "N is not in the residue class eta");
    const double lN = std::log(static_cast<double>(N));
    double pred = 0.0;
    switch (report.regime) {
      case Regime::Localized:
        pred = std::log(free ? report.Cgt_f[eta] : report.Cgt[eta]) +
               report.F * static_cast<double>(N);
        break;
      case Regime::Critical:
        pred = free ? std::log(report.Ceq_f[eta])
                    : std::log(report.Ceq[eta]) - 0.5 * lN;
        break;
      case Regime::Delocalized:
        pred = free ? std::log(report.Clt_f[eta]) - 0.5 * lN
                    : std::log(report.Clt[eta]) - 1.5 * lN;
        break;
    }
    ConvergenceRow row;
    row.N = N;
    row.log_Z = table.log_partition(endpoint, 0, N);
    row.log_prediction = pred;
    row.ratio = std::exp(row.log_Z - pred);
    const double gap = std::abs(row.ratio - 1.0);
    if (gap > prev_gap + 1e-12) out.monotone = false;
    prev_gap = gap;
    out.rows.push_back(row);
  }
  return out;
}

LocalizationCheck copolymer_localization_check(const ChargeSet& raw,
                                               const ReturnLaw& r,
                                               std::int64_t x_max) {
  const ChargeSet c = canonicalize(raw);
  const Tolerances tol;
  const int T = c.T;
  for (int i = 0; i < T; ++i) {
    require(std::abs(c.omega_zero[i]) <= tol.h_zero &&
                std::abs(c.omega_zero_tilde[i]) <= tol.h_zero,
            "copolymer check needs omega_zero = omega_zero_tilde = 0");
  }
  require(is_zero_h(c, tol), "copolymer check needs h = 0");
  const SigmaMatrix sig = compute_sigma(c);
  require(!is_zero_sigma(sig, tol), "copolymer check needs Sigma != 0");

  LocalizationCheck out;
  const KernelBundle bundle(c, r, x_max, tol);
  out.delta = perron(bundle.B()).value;

  // q(gamma) = sum_{[x] = gamma} K(x) is the zero-charge B.
  const KernelBundle flat(ChargeSet::zeros(T), r, x_max, tol);
  std::vector<double> q(T);
  for (int g = 0; g < T; ++g) q[g] = flat.B()(0, g);
  const double K1 = r.K[1];
  const int one = static_cast<int>(mod(1, T));
  const double d = -K1 / (2.0 * q[one]);

  Matrix B(T, T), Bt(T, T), Bh(T, T), C(T, T);
  for (int a = 0; a < T; ++a) {
    for (int b = 0; b < T; ++b) {
      const int g = static_cast<int>(mod(b - a, T));
      const double s = sig.sigma(a, b);
      if (g != one) {
        B(a, b) = 0.5 * (1.0 + std::exp(s)) * q[g];
        Bt(a, b) = std::exp(s / 2.0) * q[g];
        Bh(a, b) = Bt(a, b);
        C(a, b) = q[g];
      } else {
        const double cg = (q[one] - K1) / q[one];
        B(a, b) = K1 + 0.5 * (1.0 + std::exp(s)) * (q[one] - K1);
        Bt(a, b) = K1 + std::exp(s / 2.0) * (q[one] - K1);
        Bh(a, b) = std::exp(cg * s / 2.0) * q[one];
        C(a, b) = std::exp(d * s) * q[one];
      }
    }
  }
  out.z_B = perron(B).value;
  out.z_Btilde = perron(Bt).value;
  out.z_Bhat = perron(Bh).value;
  out.z_C = perron(C).value;
  const double slack = 1e-12 * out.z_B;
  out.chain_holds = out.z_B > out.z_Btilde && out.z_Btilde >= out.z_Bhat - slack &&
                    std::abs(out.z_Bhat - out.z_C) <= slack &&
                    out.z_C >= 1.0 - slack &&
                    std::abs(out.z_B - out.delta) <= 1e-10;

  // Interpolation C(t)_{a,b} = exp(t w_a 1(b - a = [1])) q(b - a),
  // w_a = d Sigma_{a, a+[1]}; log eta(t) must be convex.
  constexpr int kGrid = 21;
  out.kingman_log_eta.resize(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    const double t = -1.0 + 2.0 * i / (kGrid - 1);
    Matrix Ct(T, T);
    for (int a = 0; a < T; ++a) {
      for (int b = 0; b < T; ++b) {
        const int g = static_cast<int>(mod(b - a, T));
        const double w = g == one ? t * d * sig.sigma(a, b) : 0.0;
        Ct(a, b) = std::exp(w) * q[g];
      }
    }
    out.kingman_log_eta[i] = std::log(perron(Ct).value);
  }
  double min_d2 = kInf;
  for (int i = 1; i + 1 < kGrid; ++i) {
    min_d2 = std::min(min_d2, out.kingman_log_eta[i - 1] -
                                  2.0 * out.kingman_log_eta[i] +
                                  out.kingman_log_eta[i + 1]);
  }
  out.kingman_min_second_difference = min_d2;
  out.kingman_convex = min_d2 >= -1e-9;
  out.localized = out.delta - 1.0 > 1e-12 * std::max(1.0, out.delta);
  return out;
}

}  // namespace copoly
