// viso: sample virtual isometry measures, track the eigenangle flow across
// dimensions, estimate spectral statistics, validate invariants, benchmark.
//
// Reproducibility: every output file is paired with a manifest; replica r of
// a run with master seed s draws from Rng(s, r), so results are byte
// identical across thread counts and runs. Exit codes: 0 success, 2 invalid
// arguments, 3 numerical failure (reproduction manifest already on disk),
// 4 validation failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "viso/asymptotics.hpp"
#include "viso/builder.hpp"
#include "viso/constants.hpp"
#include "viso/flow.hpp"
#include "viso/io.hpp"
#include "viso/linalg.hpp"
#include "viso/measures.hpp"
#include "viso/projection.hpp"
#include "viso/rng.hpp"
#include "viso/secular.hpp"
#include "viso/stats.hpp"
#include "viso/threads.hpp"
#include "viso/version.hpp"

namespace {

using nlohmann::ordered_json;

constexpr double quiet_nan = std::numeric_limits<double>::quiet_NaN();

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<long long> parse_indices(const std::string& text) {
  std::vector<long long> out;
  size_t pos = 0;
  while (true) {
    const size_t comma = text.find(',', pos);
    const std::string tok =
        comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
    out.push_back(viso::parse_int(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// min and max circular gap, wraparound included; {2 pi, 2 pi} for n = 1
std::pair<double, double> circular_gaps(const viso::SpectralState& s) {
  double mn = s.angles.front() + viso::two_pi - s.angles.back();
  double mx = mn;
  for (size_t i = 1; i < s.angles.size(); i++) {
    const double g = s.angles[i] - s.angles[i - 1];
    mn = std::min(mn, g);
    mx = std::max(mx, g);
  }
  return {mn, mx};
}

void write_manifest(const std::string& out_prefix, const viso::RunManifest& m) {
  viso::write_file(out_prefix + ".manifest.json", viso::manifest_serialize(m));
}

std::string json_dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- sample --

struct SampleArgs {
  std::string measure = "haar";
  double delta_re = 0.0;
  double delta_im = 0.0;
  double theta = 1.0;
  int n_max = 8;
  long long replicas = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  int threads = 0;
};

viso::MeasureSpec make_spec(const SampleArgs& a) {
  if (a.measure == "haar") return viso::MeasureSpec::haar(a.seed);
  if (a.measure == "hua-pickrell") {
    if (a.delta_re < 0.0)
      throw std::invalid_argument(
          "unsupported parameter domain: hua-pickrell tilt needs real part >= 0");
    return viso::MeasureSpec::hua_pickrell(viso::cplx(a.delta_re, a.delta_im), a.seed);
  }
  return viso::MeasureSpec::ewens(a.theta, a.seed);
}

int cmd_sample(const SampleArgs& a) {
  const viso::MeasureSpec spec = make_spec(a);
  viso::RunManifest man;
  man.command = "sample";
  man.master_seed = a.seed;
  man.params = {{"measure", a.measure},
                {"delta-re", viso::format_float(a.delta_re)},
                {"delta-im", viso::format_float(a.delta_im)},
                {"theta", viso::format_float(a.theta)},
                {"n-max", std::to_string(a.n_max)},
                {"replicas", std::to_string(a.replicas)},
                {"format", a.format},
                {"out", a.out}};
  write_manifest(a.out, man);

  // trace statistics need the materialized unitary, whose chain build is
  // cubic in n; beyond this cap only vectors and determinant factors go out
  const bool with_trace = a.n_max <= 1024;
  struct Row {
    std::string file_body;
    viso::cplx trace{quiet_nan, quiet_nan};
    viso::cplx logdet{0.0, 0.0};
  };
  std::vector<Row> rows(static_cast<size_t>(a.replicas));

  viso::parallel_replicas(a.replicas, a.threads, [&](long long r) {
    viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
    std::vector<viso::CVector> xs;
    xs.reserve(static_cast<size_t>(a.n_max));
    for (int k = 1; k <= a.n_max; k++) xs.push_back(viso::sample_measure_vector(spec, k, rng));

    Row& row = rows[static_cast<size_t>(r)];
    try {
      row.logdet = viso::log_det_id_minus(xs);
    } catch (const viso::SingularMatrixError&) {
      // a vanishing factor means det(Id - u) = 0 exactly (an eigenvalue 1)
      row.logdet = {-std::numeric_limits<double>::infinity(), quiet_nan};
    }
    if (with_trace) {
      viso::VirtualIsometryState s = viso::init(xs[0]);
      for (int k = 1; k < a.n_max; k++) s = viso::extend(s, xs[static_cast<size_t>(k)]);
      row.trace = viso::trace(s.u);
    }

    if (a.format == "csv") {
      viso::CsvTable vec;
      vec.header = {"k", "j", "re", "im"};
      viso::CsvTable fac;
      fac.header = {"k", "re", "im"};
      for (int k = 1; k <= a.n_max; k++) {
        const viso::CVector& x = xs[static_cast<size_t>(k - 1)];
        for (int j = 0; j < k; j++)
          vec.rows.push_back({std::to_string(k), std::to_string(j),
                              viso::format_float(x[static_cast<size_t>(j)].real()),
                              viso::format_float(x[static_cast<size_t>(j)].imag())});
        const viso::cplx factor = 1.0 - x[static_cast<size_t>(k - 1)];
        fac.rows.push_back({std::to_string(k), viso::format_float(factor.real()),
                            viso::format_float(factor.imag())});
      }
      row.file_body = viso::csv_serialize(vec) + "#factors\n" + viso::csv_serialize(fac);
    } else {
      ordered_json j;
      j["replica"] = r;
      j["n_max"] = a.n_max;
      ordered_json vecs = ordered_json::array();
      ordered_json facs = ordered_json::array();
      for (int k = 1; k <= a.n_max; k++) {
        const viso::CVector& x = xs[static_cast<size_t>(k - 1)];
        ordered_json v = ordered_json::array();
        for (int j2 = 0; j2 < k; j2++)
          v.push_back({x[static_cast<size_t>(j2)].real(), x[static_cast<size_t>(j2)].imag()});
        vecs.push_back(std::move(v));
        const viso::cplx factor = 1.0 - x[static_cast<size_t>(k - 1)];
        facs.push_back({factor.real(), factor.imag()});
      }
      j["vectors"] = std::move(vecs);
      j["det_factors"] = std::move(facs);
      row.file_body = json_dump(j);
    }
  });

  const std::string ext = a.format == "csv" ? ".csv" : ".json";
  for (long long r = 0; r < a.replicas; r++)
    viso::write_file(a.out + "_r" + std::to_string(r) + ext,
                     rows[static_cast<size_t>(r)].file_body);

  viso::CsvTable summary;
  summary.header = {"replica", "trace_re", "trace_im", "logdet_re", "logdet_im"};
  viso::Accumulator tr_re, tr_im, tr_abs2;
  for (long long r = 0; r < a.replicas; r++) {
    const Row& row = rows[static_cast<size_t>(r)];
    summary.rows.push_back({std::to_string(r), viso::format_float(row.trace.real()),
                            viso::format_float(row.trace.imag()),
                            viso::format_float(row.logdet.real()),
                            viso::format_float(row.logdet.imag())});
    if (with_trace) {
      tr_re.add(row.trace.real());
      tr_im.add(row.trace.imag());
      tr_abs2.add(std::norm(row.trace));
    }
  }
  viso::write_file(a.out + "_summary.csv", viso::csv_serialize(summary));

  std::cout << "sample: " << a.replicas << " replica(s), n_max " << a.n_max << ", measure "
            << spec.name() << "\n";
  if (with_trace && a.replicas > 1)
    std::cout << "  trace mean (" << viso::format_float(tr_re.mean()) << ", "
              << viso::format_float(tr_im.mean()) << "), |trace|^2 mean "
              << viso::format_float(tr_abs2.mean()) << "\n";
  std::cout << "  wrote " << a.out << "_r*.csv/json, " << a.out << "_summary.csv and manifest\n";
  return 0;
}

// ----------------------------------------------------------------- track --

struct TrackArgs {
  int n_max = 64;
  std::string indices = "1";
  long long replicas = 1;
  std::uint64_t seed = 1;
  std::string out;
  int threads = 0;
};

int cmd_track(const TrackArgs& a) {
  const std::vector<long long> ks = parse_indices(a.indices);
  viso::RunManifest man;
  man.command = "track";
  man.master_seed = a.seed;
  man.params = {{"n-max", std::to_string(a.n_max)},
                {"indices", a.indices},
                {"replicas", std::to_string(a.replicas)},
                {"out", a.out}};
  write_manifest(a.out, man);

  struct ReplicaOut {
    std::string csv;
    bool failed = false;
    std::string error;
    int fail_n = 0;
  };
  std::vector<ReplicaOut> outs(static_cast<size_t>(a.replicas));

  viso::parallel_replicas(a.replicas, a.threads, [&](long long r) {
    viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
    viso::CsvTable t;
    t.header = viso::track_csv_header();
    viso::SpectralState s;
    s.n = 1;
    s.angles = {rng.angle()};

    const auto emit_rows = [&](const viso::StepParams* p) {
      const auto [mn, mx] = circular_gaps(s);
      for (long long k : ks) {
        const double theta = viso::angle_at_index(s, k);
        const double rescaled = static_cast<double>(s.n) * theta / viso::two_pi;
        const double gamma =
            p ? p->gamma[static_cast<size_t>(viso::flow_detail::periodic_index(k, s.n) - 1)]
              : quiet_nan;
        t.rows.push_back({std::to_string(s.n), std::to_string(k), viso::format_float(theta),
                          viso::format_float(rescaled), viso::format_float(gamma),
                          viso::format_float(p ? p->rho : quiet_nan),
                          viso::format_float(p ? p->psi : quiet_nan), viso::format_float(mn),
                          viso::format_float(mx)});
      }
    };

    ReplicaOut& ro = outs[static_cast<size_t>(r)];
    // the advance itself audits interlacing on every accepted step, so a
    // finished loop certifies the whole trajectory
    while (true) {
      if (s.n == a.n_max) {
        emit_rows(nullptr);
        break;
      }
      const viso::StepParams p = viso::sample_step_haar(s.n, rng);
      emit_rows(&p);
      try {
        s = viso::advance(s, p);
      } catch (const viso::BracketError& e) {
        ro.failed = true;
        ro.error = e.what();
        ro.fail_n = s.n;
        break;
      }
    }
    ro.csv = viso::csv_serialize(t);
  });

  bool any_failed = false;
  for (long long r = 0; r < a.replicas; r++) {
    const ReplicaOut& ro = outs[static_cast<size_t>(r)];
    viso::write_file(a.out + "_r" + std::to_string(r) + ".csv", ro.csv);
    if (ro.failed) {
      any_failed = true;
      ordered_json err;
      err["replica"] = r;
      err["failed_at_dimension"] = ro.fail_n;
      err["message"] = ro.error;
      err["master_seed"] = a.seed;
      err["reproduce"] = "rerun with the paired manifest; replica stream is Rng(master_seed, " +
                         std::to_string(r) + ")";
      viso::write_file(a.out + "_r" + std::to_string(r) + ".error.json", json_dump(err));
      std::cerr << "track: replica " << r << " failed at n = " << ro.fail_n << ": " << ro.error
                << "\n";
    }
  }
  std::cout << "track: " << a.replicas << " replica(s) to n_max " << a.n_max << ", "
            << ks.size() << " tracked index(es)\n";
  if (!any_failed) std::cout << "  interlacing audit: pass\n";
  std::cout << "  wrote " << a.out << "_r*.csv and manifest\n";
  return any_failed ? 3 : 0;
}

// ----------------------------------------------------------------- stats --

struct StatsArgs {
  std::string kind;
  std::string in;
  int n_max = 0;
  long long replicas = 0;
  std::uint64_t seed = 1;
  std::string out;
  double window = 8.0;
  int bins = 16;
  double theta = 1.0;
  std::string measure = "haar";
  double delta_re = 0.0;
  double delta_im = 0.0;
  std::string indices = "1";
  int threads = 0;
};

ordered_json pair_correlation_report(const StatsArgs& a) {
  const int n = a.n_max > 0 ? a.n_max : 64;
  const long long reps = a.replicas > 0 ? a.replicas : 1000;
  std::vector<std::vector<double>> wins(static_cast<size_t>(reps));
  viso::parallel_replicas(reps, a.threads, [&](long long r) {
    viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
    const auto run = viso::run_haar_spectral(n, {}, rng);
    wins[static_cast<size_t>(r)] = viso::rescaled_window(run.final_state, a.window);
  });
  const double span = std::min(4.0, 2.0 * a.window);
  const auto est = viso::pair_correlation(wins, a.window, span, a.bins);

  ordered_json j;
  j["kind"] = "pair-correlation";
  j["n"] = n;
  j["replicas"] = reps;
  j["window"] = a.window;
  j["points"] = est.points;
  j["edges"] = est.edges;
  j["counts"] = est.counts;
  j["r2"] = est.r2;
  ordered_json se = ordered_json::array();
  for (size_t b = 0; b + 1 < est.edges.size(); b++) {
    const double mass = (est.edges[b + 1] - est.edges[b]) *
                        (2.0 * a.window - 0.5 * (est.edges[b] + est.edges[b + 1]));
    se.push_back(std::sqrt(static_cast<double>(std::max<long long>(est.counts[b], 1))) /
                 (static_cast<double>(est.windows) * mass));
  }
  j["stderr"] = std::move(se);
  j["reference"] = est.reference;  // sine kernel curve, same bin weighting
  return j;
}

// one trajectory per (replica, tracked index); either replayed from a track
// file or generated fresh
ordered_json rate_report(const StatsArgs& a) {
  struct Entry {
    long long replica;
    long long k;
    viso::LimitEstimate est;
  };
  std::vector<Entry> entries;

  if (!a.in.empty()) {
    const viso::CsvTable t = viso::csv_parse(viso::read_file(a.in));
    if (t.header != viso::track_csv_header())
      throw std::invalid_argument("schema mismatch: " + a.in + " is not a trajectory file");
    std::vector<std::pair<long long, viso::Trajectory>> trajs;  // (k, data) in file order
    for (const auto& row : t.rows) {
      const long long n = viso::parse_int(row[0]);
      const long long k = viso::parse_int(row[1]);
      auto it = std::find_if(trajs.begin(), trajs.end(),
                             [k](const auto& pr) { return pr.first == k; });
      if (it == trajs.end()) {
        trajs.push_back({k, viso::Trajectory{}});
        it = std::prev(trajs.end());
        it->second.k = k;
      }
      viso::Trajectory& tr = it->second;
      if (n != static_cast<long long>(tr.theta.size()) + 1)
        throw std::invalid_argument("schema mismatch: trajectory rows out of order in " + a.in);
      tr.theta.push_back(viso::parse_double(row[2]));
      tr.rescaled.push_back(viso::parse_double(row[3]));
      const double g = viso::parse_double(row[4]);
      if (!std::isnan(g)) tr.gamma.push_back(g);
    }
    for (auto& [k, tr] : trajs) entries.push_back({0, k, viso::limit_estimate(tr)});
  } else {
    const int n = a.n_max > 0 ? a.n_max : 512;
    const long long reps = a.replicas > 0 ? a.replicas : 50;
    const std::vector<long long> ks = parse_indices(a.indices);
    std::vector<std::vector<viso::LimitEstimate>> got(static_cast<size_t>(reps));
    viso::parallel_replicas(reps, a.threads, [&](long long r) {
      viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
      const auto run = viso::run_haar_spectral(n, ks, rng);
      for (const auto& tr : run.tracked)
        got[static_cast<size_t>(r)].push_back(viso::limit_estimate(tr));
    });
    for (long long r = 0; r < reps; r++)
      for (size_t i = 0; i < ks.size(); i++)
        entries.push_back({r, ks[i], got[static_cast<size_t>(r)][i]});
  }

  ordered_json j;
  j["kind"] = "rate";
  ordered_json list = ordered_json::array();
  std::vector<double> eps, xs;
  for (const auto& e : entries) {
    ordered_json row;
    row["replica"] = e.replica;
    row["k"] = e.k;
    row["x_hat"] = e.est.x_hat;
    row["eps_hat"] = e.est.eps_hat;  // +inf serializes as null; see flag
    row["converged_below_resolution"] = e.est.converged_below_resolution;
    list.push_back(std::move(row));
    eps.push_back(e.est.eps_hat);
    xs.push_back(e.est.x_hat);
  }
  j["trajectories"] = std::move(list);
  j["median_eps_hat"] = viso::median(eps);
  j["median_x_hat"] = viso::median(xs);
  return j;
}

ordered_json event_e_report(const StatsArgs& a) {
  const int n = a.n_max > 0 ? a.n_max : 256;
  const long long reps = a.replicas > 0 ? a.replicas : 100;
  std::vector<std::vector<viso::StepRecord>> runs(static_cast<size_t>(reps));
  viso::parallel_replicas(reps, a.threads, [&](long long r) {
    viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
    runs[static_cast<size_t>(r)] = viso::run_haar_spectral(n, {}, rng).steps;
  });
  const viso::EventEReport rep = viso::event_e_diagnostics(runs);

  const auto cond = [](const viso::EventECondition& c) {
    ordered_json j;
    j["name"] = c.name;
    j["violating_records"] = c.violating_records;
    j["total_records"] = c.total_records;
    j["replicas_with_violation"] = c.replicas_with_violation;
    j["largest_violating_n"] = c.largest_violating_n;
    j["record_frequency"] = c.record_frequency;
    j["replica_frequency"] = c.replica_frequency;
    return j;
  };
  ordered_json j;
  j["kind"] = "event-e";
  j["n"] = n;
  j["replicas"] = rep.replicas;
  j["rho_bound"] = cond(rep.rho);
  j["weight_bound"] = cond(rep.gamma);
  j["gap_bounds"] = cond(rep.gaps);
  j["note"] = "frequency report; the weight and gap bounds fail routinely at practical n";
  return j;
}

ordered_json capacity_report(const StatsArgs& a) {
  const int n = a.n_max > 0 ? a.n_max : 8;
  const long long reps = a.replicas > 0 ? a.replicas : 100000;
  SampleArgs spec_args;
  spec_args.measure = a.measure;
  spec_args.delta_re = a.delta_re;
  spec_args.delta_im = a.delta_im;
  spec_args.theta = a.theta;
  spec_args.seed = a.seed;
  const viso::MeasureSpec spec = make_spec(spec_args);
  viso::Rng rng(a.seed, 0);
  const viso::CapacityEstimate est = viso::capacity_estimate(spec, n, reps, rng);

  ordered_json j;
  j["kind"] = "capacity";
  j["measure"] = a.measure;
  j["n"] = n;
  j["samples"] = est.samples;
  j["mean_re"] = est.mean.real();
  j["mean_im"] = est.mean.imag();
  j["stderr_re"] = est.se_re;
  j["stderr_im"] = est.se_im;
  if (a.measure == "haar") {
    j["expected_re"] = 0.0;  // Haar capacity vanishes in every dimension
    j["expected_im"] = 0.0;
  }
  return j;
}

ordered_json permutation_report(const StatsArgs& a) {
  const int n = a.n_max > 0 ? a.n_max : 200;
  const long long reps = a.replicas > 0 ? a.replicas : 1000;
  std::vector<double> counts(static_cast<size_t>(reps));
  std::vector<std::array<double, 3>> tops(static_cast<size_t>(reps));
  viso::parallel_replicas(reps, a.threads, [&](long long r) {
    viso::Rng rng(a.seed, static_cast<std::uint64_t>(r));
    const auto s = viso::sample_ewens_permutation(n, a.theta, rng);
    counts[static_cast<size_t>(r)] = static_cast<double>(viso::cycles(s).size());
    const auto f = viso::cycle_fractions(s, 3);
    tops[static_cast<size_t>(r)] = {f[0], f[1], f[2]};
  });
  viso::Accumulator count_acc, f1, f2, f3;
  for (long long r = 0; r < reps; r++) {
    count_acc.add(counts[static_cast<size_t>(r)]);
    f1.add(tops[static_cast<size_t>(r)][0]);
    f2.add(tops[static_cast<size_t>(r)][1]);
    f3.add(tops[static_cast<size_t>(r)][2]);
  }
  double expected_cycles = 0.0;  // sum_k theta / (theta + k - 1), exact
  for (int k = 1; k <= n; k++) expected_cycles += a.theta / (a.theta + k - 1);

  ordered_json j;
  j["kind"] = "permutation";
  j["n"] = n;
  j["theta"] = a.theta;
  j["replicas"] = reps;
  j["mean_cycle_count"] = count_acc.mean();
  j["stderr_cycle_count"] = count_acc.stderr_mean();
  j["expected_cycle_count"] = expected_cycles;
  j["mean_longest_fraction"] = f1.mean();
  j["stderr_longest_fraction"] = f1.stderr_mean();
  j["mean_second_fraction"] = f2.mean();
  j["mean_third_fraction"] = f3.mean();
  return j;
}

int cmd_stats(const StatsArgs& a) {
  viso::RunManifest man;
  man.command = "stats";
  man.master_seed = a.seed;
  man.params = {{"kind", a.kind},
                {"in", a.in},
                {"n-max", std::to_string(a.n_max)},
                {"replicas", std::to_string(a.replicas)},
                {"window", viso::format_float(a.window)},
                {"bins", std::to_string(a.bins)},
                {"theta", viso::format_float(a.theta)},
                {"measure", a.measure},
                {"delta-re", viso::format_float(a.delta_re)},
                {"delta-im", viso::format_float(a.delta_im)},
                {"indices", a.indices},
                {"out", a.out}};
  write_manifest(a.out, man);

  ordered_json j;
  if (a.kind == "pair-correlation") j = pair_correlation_report(a);
  else if (a.kind == "rate") j = rate_report(a);
  else if (a.kind == "event-e") j = event_e_report(a);
  else if (a.kind == "capacity") j = capacity_report(a);
  else j = permutation_report(a);
  viso::write_file(a.out + ".json", json_dump(j));
  std::cout << "stats " << a.kind << ": wrote " << a.out << ".json and manifest\n";
  return 0;
}

// -------------------------------------------------------------- validate --

struct ValidateArgs {
  std::string level = "quick";
  std::uint64_t seed = 1;
  bool corrupt_unitarity = false;  // test hook: inject a broken matrix
  std::string out;
};

viso::CMatrix realize_step(const viso::SpectralState& s, const viso::StepParams& p) {
  const int n = s.n;
  viso::CMatrix d(n + 1);
  for (int i = 0; i < n; i++) d(i, i) = std::polar(1.0, s.angles[static_cast<size_t>(i)]);
  d(n, n) = 1.0;
  viso::CVector x(static_cast<size_t>(n + 1));
  const double w = 1.0 - p.rho * p.rho;
  for (int i = 0; i < n; i++)
    x[static_cast<size_t>(i)] = std::sqrt(std::max(0.0, p.gamma[static_cast<size_t>(i)] * w));
  x[static_cast<size_t>(n)] = std::polar(p.rho, p.psi);
  double norm = 0.0;
  for (const auto& c : x) norm += std::norm(c);
  norm = std::sqrt(norm);
  for (auto& c : x) c /= norm;
  viso::apply_reflection_left(x, d);
  return d;
}

int cmd_validate(const ValidateArgs& a) {
  const bool full = a.level == "full";
  struct SuiteResult {
    std::string name;
    bool pass = true;
    double seconds = 0.0;
    std::string detail;
  };
  std::vector<SuiteResult> results;

  const auto run_suite = [&](const std::string& name, auto&& body) {
    SuiteResult res;
    res.name = name;
    const double t0 = now_seconds();
    try {
      body(res);
    } catch (const std::exception& e) {
      res.pass = false;
      if (res.detail.empty()) res.detail = e.what();
    }
    res.seconds = now_seconds() - t0;
    results.push_back(res);
    std::cout << "  " << name << ": " << (res.pass ? "pass" : "FAIL") << " ("
              << viso::format_float(res.seconds) << " s)";
    if (!res.pass) std::cout << "  [" << res.detail << "]";
    std::cout << "\n";
  };

  std::cout << "validate (" << a.level << ", seed " << a.seed << ")\n";

  // one-dimension projections undo extensions, compositions chain, and the
  // matrices stay unitary
  run_suite("projection coherence", [&](SuiteResult& res) {
    const int chains = full ? 10 : 4;
    const int depth = full ? 40 : 24;
    for (int c = 0; c < chains; c++) {
      viso::Rng rng(a.seed, 1000 + static_cast<std::uint64_t>(c));
      viso::VirtualIsometryState s = viso::init(viso::sample_sphere(1, rng));
      for (int n = 1; n < depth; n++) {
        const viso::VirtualIsometryState next =
            viso::extend(s, viso::sample_sphere(n + 1, rng));
        viso::CMatrix u = next.u;
        if (a.corrupt_unitarity && c == 0 && n == depth / 2) u(0, 0) += 1e-3;
        const double uerr = viso::unitarity_error(u);
        if (uerr > 1e-9) {
          res.pass = false;
          res.detail = "unitarity deviation " + viso::format_float(uerr) + " at n = " +
                       std::to_string(n + 1);
          return;
        }
        const double perr = viso::norm_max(viso::sub(viso::project(u, n), s.u));
        if (perr > 1e-9) {
          res.pass = false;
          res.detail = "projection residual " + viso::format_float(perr) + " at n = " +
                       std::to_string(n + 1);
          return;
        }
        s = next;
      }
      // composition: two one-step projections equal the two-step projection
      const viso::CMatrix direct = viso::project(s.u, s.n - 2);
      const viso::CMatrix stepped = viso::project(viso::project(s.u, s.n - 1), s.n - 2);
      if (viso::norm_max(viso::sub(direct, stepped)) > 1e-9) {
        res.pass = false;
        res.detail = "projection composition mismatch";
        return;
      }
    }
  });

  // the secular product form of the characteristic polynomial agrees with
  // determinants of explicitly built matrices
  run_suite("secular product form", [&](SuiteResult& res) {
    const int seeds = full ? 8 : 3;
    const int depth = full ? 32 : 16;
    for (int c = 0; c < seeds; c++) {
      viso::Rng rng(a.seed, 2000 + static_cast<std::uint64_t>(c));
      viso::SpectralState s;
      s.n = 1;
      s.angles = {rng.angle()};
      for (int n = 1; n < depth; n++) {
        const viso::StepParams p = viso::sample_step_haar(n, rng);
        const viso::CMatrix u_next = realize_step(s, p);
        for (int t = 0; t < 20; t++) {
          const viso::cplx z = std::polar(rng.uniform(0.4, 1.6), rng.angle());
          const viso::cplx lhs = viso::charpoly_recursion_eval(s, p, z);
          const viso::cplx rhs = viso::charpoly_eval(u_next, z);
          if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, std::abs(rhs))) {
            res.pass = false;
            res.detail = "recursion mismatch at n = " + std::to_string(n);
            return;
          }
        }
        s = viso::advance(s, p);
      }
    }
  });

  // det(Id - u_n) equals the product of the generating factors for all
  // three measures
  run_suite("determinant identity", [&](SuiteResult& res) {
    const int depth = full ? 64 : 24;
    const int seeds = full ? 20 : 5;
    for (int c = 0; c < seeds; c++) {
      const std::uint64_t sd = a.seed + 3000 + static_cast<std::uint64_t>(c);
      const viso::MeasureSpec specs[3] = {viso::MeasureSpec::haar(sd),
                                          viso::MeasureSpec::hua_pickrell({1.0, 0.5}, sd),
                                          viso::MeasureSpec::ewens(1.0, sd)};
      for (const auto& spec : specs) {
        viso::Rng rng(sd, 7);
        const viso::VirtualIsometryState s = viso::sample_virtual_isometry(spec, depth, rng);
        viso::cplx prod = 1.0;
        for (int k = 0; k < s.n; k++)
          prod *= 1.0 - s.xs[static_cast<size_t>(k)][static_cast<size_t>(k)];
        viso::CMatrix m = viso::identity(s.n);
        for (int i = 0; i < s.n; i++)
          for (int j = 0; j < s.n; j++) m(i, j) -= s.u(i, j);
        const viso::cplx d = viso::det(m);
        if (std::abs(d - prod) > 1e-8 * std::max(1.0, std::abs(d))) {
          res.pass = false;
          res.detail = "determinant mismatch for " + spec.name();
          return;
        }
      }
    }
  });

  // parameters recovered from the matrix chain drive the secular flow onto
  // the same spectrum
  run_suite("coupled path", [&](SuiteResult& res) {
    const int seeds = full ? 8 : 3;
    const int depth = full ? 14 : 10;
    for (int c = 0; c < seeds; c++) {
      viso::Rng rng(a.seed, 4000 + static_cast<std::uint64_t>(c));
      viso::VirtualIsometryState s = viso::init(viso::sample_sphere(1, rng));
      double a0 = std::arg(s.u(0, 0));
      if (a0 <= 0.0) a0 += viso::two_pi;
      viso::SpectralState st;
      st.n = 1;
      st.angles = {a0};
      for (int n = 1; n < depth; n++) {
        const viso::CVector x = viso::sample_sphere(n + 1, rng);
        const auto p = viso::spectral_params_from_matrix(s, x, st.angles);
        if (!p) {
          res.pass = false;
          res.detail = "unexpected fixed point extension";
          return;
        }
        st = viso::advance(st, *p);
        s = viso::extend(s, x);
        for (double ang : st.angles) {
          const double resid = std::abs(viso::charpoly_eval(s.u, std::polar(1.0, ang)));
          if (resid > 1e-7) {
            res.pass = false;
            res.detail = "eigenangle residual " + viso::format_float(resid) + " at n = " +
                         std::to_string(s.n);
            return;
          }
        }
      }
    }
  });

  // long flows keep strict interlacing (the advance audits every step)
  run_suite("interlacing flow", [&](SuiteResult& res) {
    const int runs = full ? 4 : 2;
    const int depth = full ? 2048 : 400;
    for (int c = 0; c < runs; c++) {
      viso::Rng rng(a.seed, 5000 + static_cast<std::uint64_t>(c));
      const auto run = viso::run_haar_spectral(depth, {}, rng);
      for (size_t i = 1; i < run.final_state.angles.size(); i++)
        if (!(run.final_state.angles[i] > run.final_state.angles[i - 1])) {
          res.pass = false;
          res.detail = "final spectrum not strictly increasing";
          return;
        }
    }
  });

  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  std::cout << "validation: " << (all ? "pass" : "FAIL") << "\n";

  if (!a.out.empty()) {
    ordered_json j;
    j["level"] = a.level;
    j["seed"] = a.seed;
    j["pass"] = all;
    ordered_json suites = ordered_json::array();
    for (const auto& r : results) {
      ordered_json s;
      s["name"] = r.name;
      s["pass"] = r.pass;
      s["seconds"] = r.seconds;
      if (!r.detail.empty()) s["detail"] = r.detail;
      suites.push_back(std::move(s));
    }
    j["suites"] = std::move(suites);
    viso::write_file(a.out + ".json", json_dump(j));
  }
  return all ? 0 : 4;
}

// ----------------------------------------------------------------- bench --

struct BenchArgs {
  int n_max = 4096;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  viso::RunManifest man;
  man.command = "bench";
  man.master_seed = a.seed;
  man.params = {{"n-max", std::to_string(a.n_max)}, {"out", a.out}};
  write_manifest(a.out, man);

  std::vector<int> checkpoints;
  for (int n = 1; n < a.n_max; n *= 2) checkpoints.push_back(n);
  checkpoints.push_back(a.n_max);

  // spectral path: cumulative wall time of the matrix-free flow
  std::vector<double> spectral(checkpoints.size(), quiet_nan);
  {
    viso::Rng rng(a.seed, 0);
    viso::SpectralState s;
    s.n = 1;
    s.angles = {rng.angle()};
    size_t next_cp = 0;
    const double t0 = now_seconds();
    while (true) {
      if (next_cp < checkpoints.size() && s.n == checkpoints[next_cp])
        spectral[next_cp++] = now_seconds() - t0;
      if (s.n >= a.n_max) break;
      s = viso::advance(s, viso::sample_step_haar(s.n, rng));
    }
  }

  // matrix path: cumulative wall time of explicit chain builds, capped
  const int matrix_cap = std::min(a.n_max, 256);
  std::vector<double> matrix_t(checkpoints.size(), quiet_nan);
  {
    viso::Rng rng(a.seed, 1);
    viso::VirtualIsometryState s = viso::init(viso::sample_sphere(1, rng));
    size_t next_cp = 0;
    const double t0 = now_seconds();
    while (true) {
      if (next_cp < checkpoints.size() && s.n == checkpoints[next_cp])
        matrix_t[next_cp++] = now_seconds() - t0;
      if (s.n >= matrix_cap) break;
      s = viso::extend(s, viso::sample_sphere(s.n + 1, rng));
    }
  }

  viso::CsvTable t;
  t.header = {"n", "spectral_seconds", "matrix_seconds"};
  for (size_t i = 0; i < checkpoints.size(); i++)
    t.rows.push_back({std::to_string(checkpoints[i]), viso::format_float(spectral[i]),
                      viso::format_float(matrix_t[i])});
  viso::write_file(a.out + ".csv", viso::csv_serialize(t));

  // log-log slope of cumulative time over a dimension range
  const auto slope = [&](const std::vector<double>& ts, int lo, int hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < checkpoints.size(); i++) {
      if (checkpoints[i] < lo || checkpoints[i] > hi) continue;
      if (!(ts[i] > 0.0)) continue;
      const double x = std::log(static_cast<double>(checkpoints[i]));
      const double y = std::log(ts[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      cnt++;
    }
    if (cnt < 2) return quiet_nan;
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  };

  std::cout << "bench: wrote " << a.out << ".csv and manifest\n";
  std::cout << "  n, spectral_seconds, matrix_seconds\n";
  for (size_t i = 0; i < checkpoints.size(); i++)
    std::cout << "  " << checkpoints[i] << ", " << viso::format_float(spectral[i]) << ", "
              << viso::format_float(matrix_t[i]) << "\n";
  if (a.n_max >= 512)
    std::cout << "  spectral cumulative slope over [256, " << a.n_max
              << "]: " << viso::format_float(slope(spectral, 256, a.n_max)) << "\n";
  if (matrix_cap >= 64)
    std::cout << "  matrix cumulative slope over [32, " << matrix_cap
              << "]: " << viso::format_float(slope(matrix_t, 32, matrix_cap)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual isometries: measure sampling, eigenangle flow, spectral statistics"};
  app.set_version_flag("--version", viso::version_string);
  app.require_subcommand(1);

  SampleArgs sa;
  CLI::App* c_sample = app.add_subcommand("sample", "draw generating vector chains");
  c_sample->add_option("--measure", sa.measure, "haar | hua-pickrell | ewens")
      ->required()
      ->check(CLI::IsMember({"haar", "hua-pickrell", "ewens"}));
  c_sample->add_option("--delta-re", sa.delta_re, "hua-pickrell tilt, real part");
  c_sample->add_option("--delta-im", sa.delta_im, "hua-pickrell tilt, imaginary part");
  c_sample->add_option("--theta", sa.theta, "ewens weight");
  c_sample->add_option("--n-max", sa.n_max, "chain length")->check(CLI::PositiveNumber);
  c_sample->add_option("--replicas", sa.replicas, "independent chains")
      ->check(CLI::PositiveNumber);
  c_sample->add_option("--seed", sa.seed, "master seed");
  c_sample->add_option("--out", sa.out, "output prefix")->required();
  c_sample->add_option("--format", sa.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  c_sample->add_option("--threads", sa.threads, "worker count (default: VISO_THREADS or cores)");

  TrackArgs ta;
  CLI::App* c_track = app.add_subcommand("track", "follow rescaled eigenangle trajectories");
  c_track->add_option("--n-max", ta.n_max, "final dimension")->check(CLI::PositiveNumber);
  c_track->add_option("--indices", ta.indices,
                      "comma list of tracked indices; <= 0 uses the periodic convention");
  c_track->add_option("--replicas", ta.replicas, "independent flows")
      ->check(CLI::PositiveNumber);
  c_track->add_option("--seed", ta.seed, "master seed");
  c_track->add_option("--out", ta.out, "output prefix")->required();
  c_track->add_option("--threads", ta.threads, "worker count");

  StatsArgs ga;
  CLI::App* c_stats = app.add_subcommand("stats", "estimate spectral statistics");
  c_stats
      ->add_option("--kind", ga.kind,
                   "pair-correlation | rate | event-e | capacity | permutation")
      ->required()
      ->check(CLI::IsMember(
          {"pair-correlation", "rate", "event-e", "capacity", "permutation"}));
  c_stats->add_option("--in", ga.in, "trajectory file to analyze (rate)");
  c_stats->add_option("--n-max", ga.n_max, "dimension (kind-specific default)");
  c_stats->add_option("--replicas", ga.replicas, "replica count (kind-specific default)");
  c_stats->add_option("--seed", ga.seed, "master seed");
  c_stats->add_option("--out", ga.out, "output prefix")->required();
  c_stats->add_option("--window", ga.window, "half width of the rescaled window")
      ->check(CLI::PositiveNumber);
  c_stats->add_option("--bins", ga.bins, "separation bins")->check(CLI::PositiveNumber);
  c_stats->add_option("--theta", ga.theta, "ewens weight (permutation)");
  c_stats->add_option("--measure", ga.measure, "measure for capacity")
      ->check(CLI::IsMember({"haar", "hua-pickrell", "ewens"}));
  c_stats->add_option("--delta-re", ga.delta_re, "hua-pickrell tilt, real part");
  c_stats->add_option("--delta-im", ga.delta_im, "hua-pickrell tilt, imaginary part");
  c_stats->add_option("--indices", ga.indices, "tracked indices (rate)");
  c_stats->add_option("--threads", ga.threads, "worker count");

  ValidateArgs va;
  CLI::App* c_validate = app.add_subcommand("validate", "run the invariant suites");
  c_validate->add_option("--level", va.level, "quick | full")
      ->check(CLI::IsMember({"quick", "full"}));
  c_validate->add_option("--seed", va.seed, "master seed");
  c_validate->add_flag("--corrupt-unitarity", va.corrupt_unitarity,
                       "test hook: inject a non-unitary matrix and expect failure");
  c_validate->add_option("--out", va.out, "optional report prefix");

  BenchArgs ba;
  CLI::App* c_bench = app.add_subcommand("bench", "time spectral flow vs matrix rebuild");
  c_bench->add_option("--n-max", ba.n_max, "largest dimension")->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", ba.seed, "master seed");
  c_bench->add_option("--out", ba.out, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_sample)) return cmd_sample(sa);
    if (app.got_subcommand(c_track)) return cmd_track(ta);
    if (app.got_subcommand(c_stats)) return cmd_stats(ga);
    if (app.got_subcommand(c_validate)) return cmd_validate(va);
    return cmd_bench(ba);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    // numerical failure; the manifest written before compute reproduces it
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
