#include "exfree/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "exfree/analytic.hpp"
#include "exfree/errors.hpp"

namespace exfree {

namespace {

void require_regime(const SystemParams& params) {
  params.validate();
  const RegimeFlag flag = regime(params);
  if (!flag.oscillatory) {
    std::ostringstream msg;
    msg << "delta = " << params.delta << " rad/us is not above 2*sqrt(2)*g = " << flag.threshold
        << " rad/us; a quantum phase transition occurs when delta < 2*sqrt(2)*g";
    throw RegimeError(msg.str());
  }
}

std::vector<double> run_times(const EvolutionSpec& spec) {
  spec.validate();
  std::vector<double> t = spec.sample_times;
  if (t.empty()) t = {0.0, spec.total_time};
  return t;
}

std::vector<double> merge_times(std::vector<double> a, std::span<const double> b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
          a.end());
  return a;
}

std::size_t index_of(const std::vector<double>& times, double t) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) < 1e-12) return k;
  }
  throw InvalidParameter("time " + std::to_string(t) + " is not on the sample grid");
}

// States along a run; exactly one of the two vectors is filled.
struct Trajectory {
  std::vector<StateVector> pure;
  std::vector<DensityMatrix> mixed;

  bool is_mixed() const { return !mixed.empty(); }
};

Trajectory propagate(const SystemParams& params, const StateVector& psi0, const EvolutionSpec& spec,
                     const std::vector<double>& times) {
  Trajectory out;
  switch (spec.method) {
    case Method::ExactUnitary: {
      const UnitaryPropagator prop(sparse_h_full(params), psi0);
      for (double t : times) out.pure.push_back(prop.at(t));
      break;
    }
    case Method::Trotter: {
      StateVector current = psi0;
      double now = 0.0;
      for (double t : times) {
        current = evolve_trotter(params, current, t - now, spec.trotter_dt, spec.trotter_order);
        now = t;
        out.pure.push_back(current);
      }
      break;
    }
    case Method::Lindblad: {
      EvolutionSpec s = spec;
      s.sample_times = times;
      s.total_time = std::max(spec.total_time, times.empty() ? 0.0 : times.back());
      const auto ops = collapse_operators(params);
      out.mixed = evolve_lindblad(build_h_full(params), ops, DensityMatrix(psi0), s);
      break;
    }
  }
  return out;
}

void add_timing(ProtocolResult& result, const SystemParams& params) {
  result.scalars["g_over_2pi_khz"] = angular_to_khz(params.g1);
  result.scalars["delta_over_2pi_khz"] = angular_to_khz(params.delta);
  try {
    const auto info = analytic::timing(params);
    result.scalars["omega_rad_per_us"] = info.omega;
    result.scalars["tau_st_us"] = info.tau_st;
    result.scalars["tau_s2_us"] = info.tau_s2;
    result.scalars["tau_ratio"] = info.ratio;
  } catch (const UnsupportedAsymmetry&) {
    result.flags.emplace_back("asymmetric couplings: no closed-form timing");
  }
}

template <typename State>
void push_populations(ProtocolResult& result, const std::vector<State>& states) {
  Series n1{"n1", "photons", {}}, n2{"n2", "photons", {}}, n3{"n3", "photons", {}};
  for (const auto& s : states) {
    const auto n = mean_photon_numbers(s);
    n1.values.push_back(n[kS1]);
    n2.values.push_back(n[kS2]);
    n3.values.push_back(n[kS3]);
  }
  result.series.push_back(std::move(n1));
  result.series.push_back(std::move(n2));
  result.series.push_back(std::move(n3));
}

void push_populations(ProtocolResult& result, const Trajectory& traj) {
  if (traj.is_mixed()) {
    push_populations(result, traj.mixed);
  } else {
    push_populations(result, traj.pure);
  }
}

void flag_method(ProtocolResult& result, const SystemParams& params, const EvolutionSpec& spec) {
  if (spec.method != Method::Lindblad && params.has_decoherence()) {
    result.flags.emplace_back("coherence inputs ignored by the " + std::string(to_string(spec.method)) +
                              " method");
  }
}

double s2_vacuum_weight(const StateVector& psi) {
  double w = 0.0;
  for (std::size_t i = 0; i < psi.dims().total(); ++i) {
    if (psi.dims().occupation(i, kS2) == 0) w += std::norm(psi[i]);
  }
  return w;
}

double s2_vacuum_weight(const DensityMatrix& rho) {
  double w = 0.0;
  for (std::size_t i = 0; i < rho.dims().total(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (rho.dims().occupation(i, kS2) == 0) w += rho.elements()(ii, ii).real();
  }
  return w;
}

double joint(const auto& state, int n1, int n3) {
  const std::array<std::size_t, 2> modes{kS1, kS3};
  const std::array<int, 2> occ{n1, n3};
  if (n1 >= state.dims()[kS1] || n3 >= state.dims()[kS3]) return 0.0;
  return joint_population(state, modes, occ);
}

}  // namespace

const Series& ProtocolResult::column(std::string_view name) const {
  for (const auto& s : series) {
    if (s.name == name) return s;
  }
  throw InvalidParameter("result has no series '" + std::string(name) + "'");
}

double ProtocolResult::scalar(std::string_view name) const {
  const auto it = scalars.find(std::string(name));
  if (it == scalars.end()) throw InvalidParameter("result has no scalar '" + std::string(name) + "'");
  return it->second;
}

double ProtocolResult::retention() const {
  double r = 1.0;
  for (const auto& s : stages) r *= s.success_probability;
  return r;
}

Purification parse_purification(std::string_view text) {
  if (text == "none") return Purification::None;
  if (text == "qubit") return Purification::Qubit;
  if (text == "qubit+cavity") return Purification::QubitCavity;
  throw InvalidParameter("unknown purification '" + std::string(text) + "' (none|qubit|qubit+cavity)");
}

std::string_view to_string(Purification p) {
  switch (p) {
    case Purification::None: return "none";
    case Purification::Qubit: return "qubit";
    case Purification::QubitCavity: return "qubit+cavity";
  }
  return "?";
}

ProcessFidelity transfer_process_fidelity(const SystemParams& params, Method method, double t,
                                          bool post_select_s2, double trotter_dt) {
  params.validate();
  if (!(t >= 0.0)) throw InvalidParameter("transfer time must be >= 0");
  const ModeDims& dims = params.dims;
  const auto n3 = static_cast<Eigen::Index>(dims[kS3]);
  const auto n12 = static_cast<Eigen::Index>(dims[kS1] * dims[kS2]);
  std::array<Matrix, 4> outputs;  // index 2a + b holds E(|a><b|)

  if (method == Method::Lindblad) {
    const OperatorMatrix h = build_h_full(params);
    const auto ops = collapse_operators(params);
    EvolutionSpec spec;
    spec.method = Method::Lindblad;
    spec.total_time = t;
    spec.sample_times = {t};
    const std::array<std::size_t, 1> keep{kS3};
    for (const auto& [a, b] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
      const Vector ka = fock_state(dims, {a, 0, 0}).amplitudes();
      const Vector kb = fock_state(dims, {b, 0, 0}).amplitudes();
      Matrix x = ka * kb.adjoint();
      if (t > 0.0) x = evolve_lindblad_operator(h, ops, x, spec).front();
      if (post_select_s2) {
        for (std::size_t i = 0; i < dims.total(); ++i) {
          if (dims.occupation(i, kS2) == 0) continue;
          x.row(static_cast<Eigen::Index>(i)).setZero();
          x.col(static_cast<Eigen::Index>(i)).setZero();
        }
      }
      outputs[static_cast<std::size_t>(2 * a + b)] = partial_trace(x, dims, keep);
    }
    outputs[2] = outputs[1].adjoint();
  } else {
    std::array<Vector, 2> psi;
    for (int a = 0; a < 2; ++a) {
      const StateVector in = fock_state(dims, {a, 0, 0});
      StateVector out = method == Method::Trotter
                            ? evolve_trotter(params, in, t, trotter_dt)
                            : evolve_unitary(sparse_h_full(params), in, t);
      Vector v = out.amplitudes();
      if (post_select_s2) {
        for (std::size_t i = 0; i < dims.total(); ++i) {
          if (dims.occupation(i, kS2) != 0) v[static_cast<Eigen::Index>(i)] = 0.0;
        }
      }
      psi[static_cast<std::size_t>(a)] = std::move(v);
    }
    // S3 is the fastest index, so the amplitudes reshape to (n3, n1*n2).
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const Eigen::Map<const Matrix> ma(psi[static_cast<std::size_t>(a)].data(), n3, n12);
        const Eigen::Map<const Matrix> mb(psi[static_cast<std::size_t>(b)].data(), n3, n12);
        outputs[static_cast<std::size_t>(2 * a + b)] = ma * mb.adjoint();
      }
    }
  }

  const QubitChannel channel = [&outputs](const Eigen::Matrix2cd& x) {
    Matrix r = Matrix::Zero(outputs[0].rows(), outputs[0].cols());
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) r += x(a, b) * outputs[static_cast<std::size_t>(2 * a + b)];
    }
    return r;
  };
  ProcessOptions options;
  options.post_selected = post_select_s2;
  // Truncation and integrator error both show up as small trace loss.
  options.trace_tolerance = 1e-5;
  return process_fidelity_qubit_subspace(channel, options);
}

ProtocolResult run_single_photon_qst(const SystemParams& params, const EvolutionSpec& spec) {
  require_regime(params);
  ProtocolResult result;
  result.experiment = "qst";
  result.times = run_times(spec);
  add_timing(result, params);
  flag_method(result, params, spec);
  const Trajectory traj = propagate(params, fock_state(params.dims, {1, 0, 0}), spec, result.times);
  push_populations(result, traj);
  return result;
}

ProtocolResult run_purified_qst(const SystemParams& params, const EvolutionSpec& spec,
                                const PurificationSpec& purification) {
  if (!(purification.gamma_q >= 0.0)) throw InvalidParameter("gamma_q must be >= 0");
  ProtocolResult result = run_single_photon_qst(params, spec);
  result.experiment = "purified-qst";
  const double t = spec.total_time;
  result.scalars["readout_time_us"] = t;

  const ProcessFidelity cavity = transfer_process_fidelity(params, spec.method, t, false, spec.trotter_dt);
  const double p_qubit = std::exp(-purification.gamma_q * t);
  const double f_unpurified = p_qubit * cavity.fidelity + (1.0 - p_qubit) * 0.25;
  result.scalars["fidelity_unpurified"] = f_unpurified;
  result.scalars["failure_qubit"] = 1.0 - p_qubit;
  result.scalars["fidelity"] = f_unpurified;
  result.scalars["phase_rad"] = cavity.phase;
  result.process = cavity.process;

  if (purification.stages != Purification::None) {
    result.stages.push_back({"qubit", p_qubit});
    result.scalars["fidelity_qubit"] = cavity.fidelity;
    result.scalars["fidelity"] = cavity.fidelity;
  }
  if (purification.stages == Purification::QubitCavity) {
    const Trajectory end = propagate(params, fock_state(params.dims, {1, 0, 0}), spec, {t});
    const double p_cavity = end.is_mixed() ? s2_vacuum_weight(end.mixed.front())
                                           : s2_vacuum_weight(end.pure.front());
    const ProcessFidelity post = transfer_process_fidelity(params, spec.method, t, true, spec.trotter_dt);
    result.stages.push_back({"cavity", p_cavity});
    result.scalars["failure_cavity"] = 1.0 - p_cavity;
    result.scalars["fidelity_qubit_cavity"] = post.fidelity;
    result.scalars["fidelity"] = post.fidelity;
    result.scalars["phase_rad"] = post.phase;
    result.process = post.process;
  }
  result.scalars["retention"] = result.retention();
  return result;
}

ProtocolResult run_hom(const SystemParams& params, const EvolutionSpec& spec,
                       std::span<const double> snapshot_times) {
  require_regime(params);
  if (params.dims[kS1] < 3 || params.dims[kS3] < 3) {
    throw InvalidDimension("HOM needs at least 3 levels on S1 and S3");
  }
  ProtocolResult result;
  result.experiment = "hom";
  add_timing(result, params);
  flag_method(result, params, spec);

  std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
  if (snaps.empty() && result.scalars.contains("tau_st_us")) {
    const double half = 0.5 * result.scalars.at("tau_st_us");
    for (int n = 0; (2 * n + 1) * half <= spec.total_time * (1.0 + 1e-12); ++n) {
      snaps.push_back((2 * n + 1) * half);
    }
  }
  for (double t : snaps) {
    if (t < 0.0 || t > spec.total_time * (1.0 + 1e-12)) {
      throw InvalidParameter("HOM snapshot times must lie within the run");
    }
  }
  result.times = merge_times(run_times(spec), snaps);
  const Trajectory traj = propagate(params, fock_state(params.dims, {1, 0, 1}), spec, result.times);
  push_populations(result, traj);

  Series p11{"P11", "prob", {}}, p02{"P02", "prob", {}}, p20{"P20", "prob", {}}, rest{"P_rest", "prob", {}};
  auto add_row = [&](const auto& s) {
    const double a = joint(s, 1, 1), b = joint(s, 0, 2), c = joint(s, 2, 0);
    p11.values.push_back(a);
    p02.values.push_back(b);
    p20.values.push_back(c);
    rest.values.push_back(std::max(0.0, 1.0 - a - b - c));
  };
  if (traj.is_mixed()) {
    for (const auto& s : traj.mixed) add_row(s);
  } else {
    for (const auto& s : traj.pure) add_row(s);
  }
  result.series.push_back(std::move(p11));
  result.series.push_back(std::move(p02));
  result.series.push_back(std::move(p20));
  result.series.push_back(std::move(rest));

  const ModeDims pair_dims{params.dims[kS1], params.dims[kS3]};
  Vector bell = Vector::Zero(static_cast<Eigen::Index>(pair_dims.total()));
  bell[static_cast<Eigen::Index>(pair_dims.index({0, 2}))] = 1.0 / std::numbers::sqrt2;
  bell[static_cast<Eigen::Index>(pair_dims.index({2, 0}))] = cplx(0.0, 1.0 / std::numbers::sqrt2);
  const StateVector target(pair_dims, bell);

  for (double t : snaps) {
    const std::size_t k = index_of(result.times, t);
    const DensityMatrix pair = traj.is_mixed() ? partial_trace(traj.mixed[k], {kS1, kS3})
                                               : partial_trace(traj.pure[k], {kS1, kS3});
    Snapshot snap;
    snap.t = t;
    snap.values["P11"] = result.column("P11").values[k];
    snap.values["P02_plus_P20"] = result.column("P02").values[k] + result.column("P20").values[k];
    const QubitPair qp = project_02(pair);
    snap.values["weight_02"] = qp.weight;
    snap.values["negativity"] = qp.weight > 1e-6 ? negativity(Matrix(qp.rho), 2, 2) : 0.0;
    const PhaseOptimum opt = phase_optimized_fidelity(target, pair, 1);
    snap.values["fidelity"] = opt.fidelity;
    snap.values["phase_rad"] = opt.phase;
    if (!result.pauli && qp.weight >= 1e-6) result.pauli = pauli_table_02(pair);
    result.snapshots.push_back(std::move(snap));
  }
  if (!result.snapshots.empty()) {
    for (const auto& [key, value] : result.snapshots.front().values) result.scalars["first_" + key] = value;
  }
  return result;
}

ProtocolResult run_binomial_transfer(const SystemParams& params, const EvolutionSpec& spec,
                                     BinomialLabel label, const BinomialOptions& options) {
  require_regime(params);
  const ModeDims& dims = params.dims;
  if (dims[kS1] < 6 || dims[kS3] < 6) {
    throw InvalidDimension("binomial transfer needs at least 6 levels on S1 and S3");
  }
  ProtocolResult result;
  result.experiment = "binomial";
  add_timing(result, params);
  flag_method(result, params, spec);
  result.times = merge_times(run_times(spec), std::array<double, 1>{spec.total_time});

  const std::array<StateVector, 3> parts{binomial_code_state(label, dims[kS1]),
                                         fock_state(ModeDims{dims[kS2]}, {0}),
                                         fock_state(ModeDims{dims[kS3]}, {0})};
  const Trajectory traj = propagate(params, product_state(dims, parts), spec, result.times);
  push_populations(result, traj);

  // Received single-mode state, optionally after one photon loss on S3.
  std::optional<DensityMatrix> received;
  double jump_probability = 1.0;
  if (traj.is_mixed()) {
    const DensityMatrix& last = traj.mixed.back();
    if (options.inject_jump) {
      auto jumped = apply_jump(last, kS3);
      jump_probability = jumped.probability;
      if (jumped.possible()) received = partial_trace(*jumped.state, {kS3});
    } else {
      received = partial_trace(last, {kS3});
    }
  } else {
    const StateVector& last = traj.pure.back();
    if (options.inject_jump) {
      auto jumped = apply_jump(last, kS3);
      jump_probability = jumped.probability;
      if (jumped.possible()) received = partial_trace(*jumped.state, {kS3});
    } else {
      received = partial_trace(last, {kS3});
    }
  }
  if (options.inject_jump) result.scalars["jump_probability"] = jump_probability;
  if (!received) throw DegenerateProjection("binomial transfer: injected jump has zero probability");

  const StateVector target = binomial_code_state(label, dims[kS3]);
  const auto lowered = apply_jump(target, 0);
  const bool code_even = label == BinomialLabel::ZeroL || label == BinomialLabel::OneL ||
                         label == BinomialLabel::PlusIL;

  const PhaseOptimum overall = phase_optimized_fidelity(target, *received, 0);
  result.scalars["fidelity"] = overall.fidelity;
  result.scalars["phase_rad"] = overall.phase;

  const ParitySplit split = parity_split(*received, 0);
  const auto& code_branch = code_even ? split.even : split.odd;
  const auto& error_branch = code_even ? split.odd : split.even;
  result.scalars["p_code_parity"] = code_even ? split.p_even : split.p_odd;
  result.scalars["p_error_parity"] = code_even ? split.p_odd : split.p_even;
  if (code_branch) {
    result.scalars["fidelity_conditioned"] = phase_optimized_fidelity(target, *code_branch, 0).fidelity;
  }
  if (error_branch && lowered.possible()) {
    result.scalars["fidelity_error_state"] =
        phase_optimized_fidelity(*lowered.state, *error_branch, 0).fidelity;
  }

  const auto grid = wigner_grid(options.wigner_extent, options.wigner_points);
  result.wigner.push_back({"prepared", grid, wigner(DensityMatrix(target), grid)});
  result.wigner.push_back({"received", grid, wigner(*received, grid)});
  if (error_branch) result.wigner.push_back({"error", grid, wigner(*error_branch, grid)});
  return result;
}

std::vector<double> generate_tmsv_trace(double g, std::span<const double> t_us,
                                        const std::optional<NoiseSpec>& noise) {
  if (!(g > 0.0)) throw InvalidParameter("generate_tmsv_trace: g must be positive");
  std::vector<double> out;
  out.reserve(t_us.size());
  for (double t : t_us) {
    const double c = std::cosh(g * t);
    out.push_back(1.0 / (c * c));
  }
  if (noise && noise->sigma > 0.0) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> gauss(0.0, noise->sigma);
    for (double& v : out) v += gauss(rng);
  }
  return out;
}

std::vector<double> simulate_tmsv_vacuum(double g, std::span<const double> t_us, int levels) {
  if (!(g > 0.0)) throw InvalidParameter("simulate_tmsv_vacuum: g must be positive");
  const ModeDims dims{levels, levels};
  const UnitaryPropagator prop(build_h_tms_two_mode(g, dims), fock_state(dims, {0, 0}));
  std::vector<double> out;
  out.reserve(t_us.size());
  for (double t : t_us) out.push_back(mode_distribution(prop.at(t), 0).front());
  return out;
}

BudgetReport error_budget_report(const SystemParams& params, const EvolutionSpec& spec,
                                 const BudgetSpec& budget) {
  BudgetReport report;
  const double t = spec.total_time;
  const bool simulate = budget.qubit || budget.residual_s2 || budget.cavity_decoherence;
  double f_ideal = 1.0;
  if (simulate) {
    require_regime(params);
    f_ideal = transfer_process_fidelity(params.without_decoherence(), Method::ExactUnitary, t, false).fidelity;
    report.reference_fidelities["ideal"] = f_ideal;
  }
  if (budget.qubit) {
    const double p = std::exp(-budget.gamma_q * t);
    const double f = p * f_ideal + (1.0 - p) * 0.25;
    report.reference_fidelities["qubit_failure_included"] = f;
    report.lines.push_back({"qubit excitation", ablation_infidelity(f, f_ideal), true});
  }
  if (budget.residual_s2) {
    const double f_post =
        transfer_process_fidelity(params.without_decoherence(), Method::ExactUnitary, t, true).fidelity;
    report.reference_fidelities["s2_post_selected"] = f_post;
    report.lines.push_back({"residual S2 photons", ablation_infidelity(f_ideal, f_post), true});
  }
  if (budget.cavity_decoherence) {
    if (!params.has_decoherence()) {
      throw InvalidParameter("cavity-decoherence ablation needs coherence inputs");
    }
    const double f_dec = transfer_process_fidelity(params, Method::Lindblad, t, false).fidelity;
    report.reference_fidelities["cavity_decoherence"] = f_dec;
    report.lines.push_back({"cavity decoherence", ablation_infidelity(f_dec, f_ideal), true});
  }
  for (const auto& line : budget.fixed) {
    BudgetLine fixed = line;
    fixed.simulated = false;
    report.lines.push_back(fixed);
  }
  std::vector<double> values;
  for (const auto& line : report.lines) values.push_back(line.infidelity);
  report.combined_fidelity = depolarizing_budget(values);
  return report;
}

std::vector<CompareRow> compare_tms_vs_bs(double g, std::span<const double> delta_grid) {
  if (!(g > 0.0)) throw InvalidParameter("compare_tms_vs_bs: g must be positive");
  std::vector<CompareRow> rows;
  for (double delta : delta_grid) {
    SystemParams p;
    p.g1 = g;
    p.g2 = g;
    p.delta = delta;
    CompareRow row;
    row.delta = delta;
    const auto bs = analytic::bs_reference_timing(p);
    row.tau_bs = bs.tau_st;
    row.n2_amplitude_bs = bs.n2_amplitude;
    row.tms_valid = regime(p).oscillatory;
    if (row.tms_valid) {
      row.tau_tms = analytic::tau_st(p);
      row.n2_amplitude_tms = analytic::n2_amplitude_tms(p);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace exfree
