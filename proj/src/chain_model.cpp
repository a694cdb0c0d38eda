#include "voidp/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "voidp/error.hpp"

namespace voidp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> values) {
  const double hi = *std::max_element(values.begin(), values.end());
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// A probability vector together with the log of the factor removed to normalize it.
struct Message {
  std::vector<double> p;
  double log_norm = 0.0;
};

double normalize_in_place(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0.0) {
    for (double& x : v) x /= total;
  }
  return total;
}

void apply_mask(std::vector<double>& v, const Evidence* evidence, Index t, double zero) {
  if (evidence == nullptr) return;
  if (auto s = evidence->state_at(t)) {
    for (std::size_t x = 0; x < v.size(); ++x) {
      if (static_cast<State>(x) != *s) v[x] = zero;
    }
  }
}

Message to_message_from_log(std::vector<double> lv, double log_norm) {
  const double z = log_sum_exp(lv);
  Message m;
  m.p.resize(lv.size());
  if (z == kNegInf) {
    std::fill(m.p.begin(), m.p.end(), 0.0);
    m.log_norm = kNegInf;
    return m;
  }
  for (std::size_t i = 0; i < lv.size(); ++i) m.p[i] = std::exp(lv[i] - z);
  m.log_norm = log_norm + z;
  return m;
}

// Propagates `start` (a weight vector over X_from) forward to X_to, applying
// evidence masks at indices in (from, to]. Result is normalized; its log_norm is
// log of sum_x_to of the unnormalized weight.
Message forward(const ChainModel& model, std::vector<double> start, Index from, Index to,
                const Evidence* masks, bool log_space) {
  if (!log_space) {
    Message m;
    m.p = std::move(start);
    double total = normalize_in_place(m.p);
    m.log_norm = total > 0.0 ? std::log(total) : kNegInf;
    for (Index t = from; t < to && m.log_norm != kNegInf; ++t) {
      const Matrix& tr = model.transition(t);
      std::vector<double> next(tr.cols(), 0.0);
      for (std::size_t x = 0; x < tr.rows(); ++x) {
        const double w = m.p[x];
        if (w == 0.0) continue;
        for (std::size_t y = 0; y < tr.cols(); ++y) next[y] += w * tr(x, y);
      }
      apply_mask(next, masks, t + 1, 0.0);
      total = normalize_in_place(next);
      m.p = std::move(next);
      m.log_norm = total > 0.0 ? m.log_norm + std::log(total) : kNegInf;
    }
    if (m.log_norm == kNegInf) std::fill(m.p.begin(), m.p.end(), 0.0);
    return m;
  }
  std::vector<double> lv(start.size());
  for (std::size_t i = 0; i < start.size(); ++i) lv[i] = start[i] > 0.0 ? std::log(start[i]) : kNegInf;
  for (Index t = from; t < to; ++t) {
    const Matrix& tr = model.transition(t);
    std::vector<double> next(tr.cols(), kNegInf);
    std::vector<double> terms(tr.rows());
    for (std::size_t y = 0; y < tr.cols(); ++y) {
      for (std::size_t x = 0; x < tr.rows(); ++x) {
        terms[x] = tr(x, y) > 0.0 ? lv[x] + std::log(tr(x, y)) : kNegInf;
      }
      next[y] = log_sum_exp(terms);
    }
    apply_mask(next, masks, t + 1, kNegInf);
    lv = std::move(next);
  }
  return to_message_from_log(std::move(lv), 0.0);
}

// Propagates a likelihood vector over X_to backward to X_from, applying evidence
// masks at indices in (from, to). The result w satisfies
// w(x_from) proportional to sum P(x_(from,to], masks | x_from) * end(x_to).
Message backward(const ChainModel& model, std::vector<double> end, Index to, Index from,
                 const Evidence* masks, bool log_space) {
  if (!log_space) {
    Message m;
    m.p = std::move(end);
    double total = normalize_in_place(m.p);
    m.log_norm = total > 0.0 ? std::log(total) : kNegInf;
    for (Index t = to - 1; t >= from && m.log_norm != kNegInf; --t) {
      const Matrix& tr = model.transition(t);
      std::vector<double> prev(tr.rows(), 0.0);
      for (std::size_t x = 0; x < tr.rows(); ++x) {
        double acc = 0.0;
        for (std::size_t y = 0; y < tr.cols(); ++y) acc += tr(x, y) * m.p[y];
        prev[x] = acc;
      }
      if (t > from) apply_mask(prev, masks, t, 0.0);
      total = normalize_in_place(prev);
      m.p = std::move(prev);
      m.log_norm = total > 0.0 ? m.log_norm + std::log(total) : kNegInf;
    }
    if (m.log_norm == kNegInf) std::fill(m.p.begin(), m.p.end(), 0.0);
    return m;
  }
  std::vector<double> lv(end.size());
  for (std::size_t i = 0; i < end.size(); ++i) lv[i] = end[i] > 0.0 ? std::log(end[i]) : kNegInf;
  for (Index t = to - 1; t >= from; --t) {
    const Matrix& tr = model.transition(t);
    std::vector<double> prev(tr.rows(), kNegInf);
    std::vector<double> terms(tr.cols());
    for (std::size_t x = 0; x < tr.rows(); ++x) {
      for (std::size_t y = 0; y < tr.cols(); ++y) {
        terms[y] = tr(x, y) > 0.0 ? lv[y] + std::log(tr(x, y)) : kNegInf;
      }
      prev[x] = log_sum_exp(terms);
    }
    if (t > from) apply_mask(prev, masks, t, kNegInf);
    lv = std::move(prev);
  }
  return to_message_from_log(std::move(lv), 0.0);
}

std::vector<double> point_mass(int states, State s) {
  std::vector<double> v(static_cast<std::size_t>(states), 0.0);
  v[static_cast<std::size_t>(s)] = 1.0;
  return v;
}

void check_index(const ChainModel& model, Index j, const char* what) {
  if (j < 1 || j > model.size()) {
    throw ValidationError(std::string(what) + " index " + std::to_string(j) + " outside 1.." +
                          std::to_string(model.size()));
  }
}

// Throws unless the evidence has positive probability. Consecutive observations
// are checked pairwise, which suffices on a chain.
void check_consistent(const ChainModel& model, const Evidence& ev, bool log_space) {
  const auto& entries = ev.entries();
  if (entries.empty()) return;
  const Observation first = entries.front();
  Message m = forward(model, model.prior, 1, first.index, nullptr, log_space);
  if (m.p[static_cast<std::size_t>(first.state)] <= 0.0) {
    throw ZeroProbabilityEvidence("X_" + std::to_string(first.index) + "=" +
                                  std::to_string(first.state) + " has prior probability 0");
  }
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const Observation a = entries[i - 1];
    const Observation b = entries[i];
    Message step = forward(model, point_mass(model.states(a.index), a.state), a.index, b.index,
                           nullptr, log_space);
    if (step.p[static_cast<std::size_t>(b.state)] <= 0.0) {
      throw ZeroProbabilityEvidence("X_" + std::to_string(b.index) + "=" + std::to_string(b.state) +
                                    " unreachable from X_" + std::to_string(a.index) + "=" +
                                    std::to_string(a.state));
    }
  }
}

Evidence effective_evidence(const Evidence& ev, Index upto) {
  return ev.mode() == Mode::Filtering ? ev.truncated(upto) : ev;
}

}  // namespace

const char* to_string(Mode mode) { return mode == Mode::Filtering ? "filtering" : "smoothing"; }

Mode mode_from_string(const std::string& text) {
  if (text == "filtering") return Mode::Filtering;
  if (text == "smoothing") return Mode::Smoothing;
  throw ValidationError("unknown mode '" + text + "' (expected filtering|smoothing)");
}

// ---------------------------------------------------------------------------
// ChainModel

ChainModel ChainModel::stationary(std::vector<double> prior, const Matrix& transition, int n) {
  ChainModel m;
  m.prior = std::move(prior);
  m.transitions.assign(static_cast<std::size_t>(std::max(n - 1, 0)), transition);
  return m;
}

int ChainModel::states(Index j) const {
  if (j <= 0 || j > size()) return 1;
  if (j == 1) return static_cast<int>(prior.size());
  return static_cast<int>(transition(j - 1).cols());
}

int ChainModel::max_states() const {
  int d = 1;
  for (Index j = 1; j <= size(); ++j) d = std::max(d, states(j));
  return d;
}

std::span<const double> ChainModel::values(Index j) const {
  if (state_values.empty()) return {};
  return state_values[static_cast<std::size_t>(j - 1)];
}

ValidationReport validate_model(const ChainModel& model) {
  ValidationReport report;
  auto& out = report.violations;
  auto check_dist = [&](std::span<const double> row, const std::string& where) {
    double total = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        out.push_back("negative or non-finite probability " + format_double(v) + " at " + where);
        return;
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kProbTolerance) {
      out.push_back("row sum " + format_double(total) + " at " + where);
    }
  };
  if (model.prior.empty()) {
    out.push_back("prior is empty");
  } else {
    check_dist(model.prior, "prior");
  }
  std::size_t expected_rows = model.prior.size();
  for (std::size_t i = 0; i < model.transitions.size(); ++i) {
    const Matrix& t = model.transitions[i];
    const std::string step = "step " + std::to_string(i + 1);
    if (t.rows() != expected_rows) {
      out.push_back("dimension mismatch at " + step + ": " + std::to_string(t.rows()) +
                    " rows but X_" + std::to_string(i + 1) + " has " +
                    std::to_string(expected_rows) + " states");
    }
    if (t.cols() == 0) out.push_back("empty domain for X_" + std::to_string(i + 2));
    for (std::size_t r = 0; r < t.rows(); ++r) {
      check_dist(t.row(r), step + (t.rows() > 1 ? " row " + std::to_string(r) : ""));
    }
    expected_rows = t.cols();
  }
  if (!model.state_values.empty()) {
    if (static_cast<int>(model.state_values.size()) != model.size()) {
      out.push_back("state_values has " + std::to_string(model.state_values.size()) +
                    " entries for " + std::to_string(model.size()) + " variables");
    } else {
      for (Index j = 1; j <= model.size(); ++j) {
        if (static_cast<int>(model.values(j).size()) != model.states(j)) {
          out.push_back("state_values for X_" + std::to_string(j) + " has wrong length");
        }
      }
    }
  }
  return report;
}

void require_valid(const ChainModel& model) {
  ValidationReport report = validate_model(model);
  if (report.ok()) return;
  std::string msg = "invalid chain model:";
  for (const auto& v : report.violations) msg += "\n  " + v;
  throw ValidationError(msg);
}

ValidationReport validate_hmm(const HmmModel& hmm) {
  ValidationReport report = validate_model(hmm.hidden);
  const int n = hmm.hidden.size();
  if (static_cast<int>(hmm.emissions.size()) != n) {
    report.violations.push_back("expected " + std::to_string(n) + " emission matrices, got " +
                                std::to_string(hmm.emissions.size()));
    return report;
  }
  for (Index i = 1; i <= n; ++i) {
    const Matrix& e = hmm.emissions[static_cast<std::size_t>(i - 1)];
    if (static_cast<int>(e.rows()) != hmm.hidden.states(i)) {
      report.violations.push_back("emission " + std::to_string(i) + " has wrong row count");
      continue;
    }
    for (std::size_t r = 0; r < e.rows(); ++r) {
      double total = 0.0;
      for (double v : e.row(r)) total += v;
      if (std::abs(total - 1.0) > kProbTolerance) {
        report.violations.push_back("row sum " + format_double(total) + " at emission " +
                                    std::to_string(i) + " row " + std::to_string(r));
      }
    }
  }
  return report;
}

ChainModel fold_hmm(const HmmModel& hmm, std::span<const State> y) {
  ValidationReport report = validate_hmm(hmm);
  if (!report.ok()) throw ValidationError("invalid HMM: " + report.violations.front());
  const ChainModel& chain = hmm.hidden;
  const int n = chain.size();
  if (static_cast<int>(y.size()) != n) {
    throw ValidationError("emission sequence has length " + std::to_string(y.size()) +
                          ", expected " + std::to_string(n));
  }
  auto likelihood = [&](Index i) {
    const Matrix& e = hmm.emissions[static_cast<std::size_t>(i - 1)];
    const State yi = y[static_cast<std::size_t>(i - 1)];
    if (yi < 0 || yi >= static_cast<State>(e.cols())) {
      throw ValidationError("emission value " + std::to_string(yi) + " out of range at position " +
                            std::to_string(i));
    }
    std::vector<double> l(e.rows());
    for (std::size_t x = 0; x < e.rows(); ++x) l[x] = e(x, static_cast<std::size_t>(yi));
    return l;
  };

  // beta[i-1](x) proportional to P(y_i..y_n | X_i = x), normalized per step.
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(n));
  beta[static_cast<std::size_t>(n - 1)] = likelihood(n);
  for (Index i = n - 1; i >= 1; --i) {
    const Matrix& t = chain.transition(i);
    const auto& next = beta[static_cast<std::size_t>(i)];
    std::vector<double> cur = likelihood(i);
    for (std::size_t x = 0; x < t.rows(); ++x) {
      double acc = 0.0;
      for (std::size_t z = 0; z < t.cols(); ++z) acc += t(x, z) * next[z];
      cur[x] *= acc;
    }
    if (normalize_in_place(cur) <= 0.0) {
      throw ZeroProbabilityEvidence("emission sequence has probability 0 given positions " +
                                    std::to_string(i) + ".." + std::to_string(n));
    }
    beta[static_cast<std::size_t>(i - 1)] = std::move(cur);
  }

  ChainModel folded;
  folded.state_values = chain.state_values;
  folded.prior = chain.prior;
  for (std::size_t x = 0; x < folded.prior.size(); ++x) folded.prior[x] *= beta[0][x];
  if (normalize_in_place(folded.prior) <= 0.0) {
    throw ZeroProbabilityEvidence("emission sequence has probability 0");
  }
  for (Index i = 1; i < n; ++i) {
    const Matrix& t = chain.transition(i);
    const auto& next = beta[static_cast<std::size_t>(i)];
    Matrix out(t.rows(), t.cols());
    for (std::size_t x = 0; x < t.rows(); ++x) {
      double total = 0.0;
      for (std::size_t z = 0; z < t.cols(); ++z) {
        out(x, z) = t(x, z) * next[z];
        total += out(x, z);
      }
      if (total <= 0.0) {
        // Posterior mass of X_i = x is zero; any stochastic row is admissible.
        // Use the evidence-only row so deterministic emissions fold to point masses.
        for (std::size_t z = 0; z < t.cols(); ++z) {
          out(x, z) = next[z];
          total += next[z];
        }
      }
      for (std::size_t z = 0; z < t.cols(); ++z) out(x, z) /= total;
    }
    folded.transitions.push_back(std::move(out));
  }
  return folded;
}

// ---------------------------------------------------------------------------
// Evidence

Evidence::Evidence(std::vector<Observation> entries, Mode mode)
    : entries_(std::move(entries)), mode_(mode) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].index < 1) {
      throw ValidationError("evidence index " + std::to_string(entries_[i].index) + " < 1");
    }
    if (entries_[i].state < 0) {
      throw ValidationError("negative state in evidence at X_" + std::to_string(entries_[i].index));
    }
    if (i > 0 && entries_[i].index <= entries_[i - 1].index) {
      throw ValidationError("evidence indices must be strictly increasing");
    }
  }
}

std::optional<State> Evidence::state_at(Index j) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), j,
                             [](const Observation& o, Index v) { return o.index < v; });
  if (it != entries_.end() && it->index == j) return it->state;
  return std::nullopt;
}

std::optional<Observation> Evidence::at_or_before(Index j) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), j,
                             [](Index v, const Observation& o) { return v < o.index; });
  if (it == entries_.begin()) return std::nullopt;
  return *std::prev(it);
}

std::optional<Observation> Evidence::at_or_after(Index j) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), j,
                             [](const Observation& o, Index v) { return o.index < v; });
  if (it == entries_.end()) return std::nullopt;
  return *it;
}

Evidence Evidence::truncated(Index j) const {
  std::vector<Observation> kept;
  for (const auto& o : entries_) {
    if (o.index <= j) kept.push_back(o);
  }
  return Evidence(std::move(kept), mode_);
}

Evidence Evidence::with(Observation obs) const {
  std::vector<Observation> next = entries_;
  auto it = std::lower_bound(next.begin(), next.end(), obs.index,
                             [](const Observation& o, Index v) { return o.index < v; });
  if (it != next.end() && it->index == obs.index) {
    throw ValidationError("X_" + std::to_string(obs.index) + " already observed");
  }
  next.insert(it, obs);
  return Evidence(std::move(next), mode_);
}

void check_evidence_domain(const ChainModel& model, const Evidence& evidence) {
  for (const auto& o : evidence.entries()) {
    check_index(model, o.index, "evidence");
    if (o.state >= model.states(o.index)) {
      throw ValidationError("evidence state " + std::to_string(o.state) + " out of range for X_" +
                            std::to_string(o.index));
    }
  }
}

// ---------------------------------------------------------------------------
// Inference

Dist posterior_marginal(const ChainModel& model, const Evidence& evidence, Index j,
                        InferenceOptions options) {
  require_valid(model);
  check_index(model, j, "query");
  check_evidence_domain(model, evidence);
  const Evidence ev = effective_evidence(evidence, j);
  check_consistent(model, ev, options.log_space);

  const int d = model.states(j);
  if (auto s = ev.state_at(j)) return Dist{point_mass(d, *s)};

  auto before = ev.at_or_before(j);
  auto after = ev.at_or_after(j);
  Message fwd = before ? forward(model, point_mass(model.states(before->index), before->state),
                                 before->index, j, nullptr, options.log_space)
                       : forward(model, model.prior, 1, j, nullptr, options.log_space);
  Dist out{std::move(fwd.p)};
  if (after) {
    Message bwd = backward(model, point_mass(model.states(after->index), after->state),
                           after->index, j, nullptr, options.log_space);
    for (std::size_t x = 0; x < out.p.size(); ++x) out.p[x] *= bwd.p[x];
    if (normalize_in_place(out.p) <= 0.0) {
      throw ZeroProbabilityEvidence("separators of X_" + std::to_string(j) + " are incompatible");
    }
  }
  return out;
}

Matrix pairwise_posterior(const ChainModel& model, const Evidence& evidence, Index a, Index b,
                          InferenceOptions options) {
  require_valid(model);
  check_index(model, a, "pair");
  check_index(model, b, "pair");
  if (a >= b) throw ValidationError("pairwise_posterior requires a < b");
  check_evidence_domain(model, evidence);
  const Evidence ev = effective_evidence(evidence, b);
  check_consistent(model, ev, options.log_space);

  const bool log_space = options.log_space;
  auto before = ev.at_or_before(a);
  auto after = ev.at_or_after(b);

  Message alpha = before ? forward(model, point_mass(model.states(before->index), before->state),
                                   before->index, a, &ev, log_space)
                         : forward(model, model.prior, 1, a, &ev, log_space);
  if (auto s = ev.state_at(a)) alpha.p = point_mass(model.states(a), *s);

  std::vector<double> beta(static_cast<std::size_t>(model.states(b)), 1.0);
  if (after) {
    std::vector<double> end = point_mass(model.states(after->index), after->state);
    beta = backward(model, std::move(end), after->index, b, &ev, log_space).p;
  }
  if (auto s = ev.state_at(b)) {
    for (std::size_t x = 0; x < beta.size(); ++x) {
      if (static_cast<State>(x) != *s) beta[x] = 0.0;
    }
  }

  const std::size_t da = static_cast<std::size_t>(model.states(a));
  const std::size_t db = static_cast<std::size_t>(model.states(b));
  Matrix joint(da, db);
  std::vector<double> row_log(da, kNegInf);
  std::vector<std::vector<double>> rows(da);
  for (std::size_t xa = 0; xa < da; ++xa) {
    if (alpha.p[xa] <= 0.0) continue;
    Message g = forward(model, point_mass(static_cast<int>(da), static_cast<State>(xa)), a, b, &ev,
                        log_space);
    if (g.log_norm == kNegInf) continue;
    row_log[xa] = std::log(alpha.p[xa]) + g.log_norm;
    rows[xa] = std::move(g.p);
  }
  const double hi = *std::max_element(row_log.begin(), row_log.end());
  if (hi == kNegInf) throw ZeroProbabilityEvidence("no joint mass for pair");
  double total = 0.0;
  for (std::size_t xa = 0; xa < da; ++xa) {
    if (row_log[xa] == kNegInf) continue;
    const double w = std::exp(row_log[xa] - hi);
    for (std::size_t xb = 0; xb < db; ++xb) {
      joint(xa, xb) = w * rows[xa][xb] * beta[xb];
      total += joint(xa, xb);
    }
  }
  if (total <= 0.0) throw ZeroProbabilityEvidence("no joint mass for pair");
  for (std::size_t xa = 0; xa < da; ++xa) {
    for (std::size_t xb = 0; xb < db; ++xb) joint(xa, xb) /= total;
  }
  return joint;
}

MaxMarg max_marginal(const ChainModel& model, const Evidence& evidence, Index j) {
  require_valid(model);
  check_index(model, j, "query");
  check_evidence_domain(model, evidence);
  const Evidence ev = effective_evidence(evidence, j);
  check_consistent(model, ev, true);
  const int n = model.size();

  auto log_of = [](double v) { return v > 0.0 ? std::log(v) : kNegInf; };

  // delta(x_j) = max over x_<j of log P(x_<=j, ev_<=j); sum-product alongside for log P(ev).
  std::vector<double> delta(model.prior.size());
  std::vector<double> alpha(model.prior.size());
  for (std::size_t x = 0; x < delta.size(); ++x) delta[x] = alpha[x] = log_of(model.prior[x]);
  apply_mask(delta, &ev, 1, kNegInf);
  apply_mask(alpha, &ev, 1, kNegInf);
  std::vector<double> delta_j;
  for (Index t = 1; t <= n; ++t) {
    if (t == j) delta_j = delta;
    if (t == n) break;
    const Matrix& tr = model.transition(t);
    std::vector<double> nd(tr.cols(), kNegInf);
    std::vector<double> na(tr.cols(), kNegInf);
    std::vector<double> terms(tr.rows());
    for (std::size_t y = 0; y < tr.cols(); ++y) {
      for (std::size_t x = 0; x < tr.rows(); ++x) {
        const double lt = log_of(tr(x, y));
        nd[y] = std::max(nd[y], delta[x] + lt);
        terms[x] = alpha[x] + lt;
      }
      na[y] = log_sum_exp(terms);
    }
    apply_mask(nd, &ev, t + 1, kNegInf);
    apply_mask(na, &ev, t + 1, kNegInf);
    delta = std::move(nd);
    alpha = std::move(na);
  }
  const double log_evidence = log_sum_exp(alpha);

  // eps(x_j) = max over x_>j of log P(x_>j, ev_>j | x_j).
  std::vector<double> eps(static_cast<std::size_t>(model.states(n)), 0.0);
  for (Index t = n - 1; t >= j; --t) {
    apply_mask(eps, &ev, t + 1, kNegInf);
    const Matrix& tr = model.transition(t);
    std::vector<double> prev(tr.rows(), kNegInf);
    for (std::size_t x = 0; x < tr.rows(); ++x) {
      for (std::size_t y = 0; y < tr.cols(); ++y) {
        prev[x] = std::max(prev[x], log_of(tr(x, y)) + eps[y]);
      }
    }
    eps = std::move(prev);
  }

  MaxMarg out;
  out.values.resize(delta_j.size());
  for (std::size_t x = 0; x < delta_j.size(); ++x) {
    const double lv = delta_j[x] + eps[x] - log_evidence;
    out.values[x] = lv == kNegInf ? 0.0 : std::min(1.0, std::exp(lv));
  }
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

State draw(std::span<const double> probabilities, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  State last_positive = 0;
  for (std::size_t x = 0; x < probabilities.size(); ++x) {
    if (probabilities[x] <= 0.0) continue;
    last_positive = static_cast<State>(x);
    acc += probabilities[x];
    if (u < acc) return static_cast<State>(x);
  }
  return last_positive;
}

std::vector<State> sample(const ChainModel& model, std::mt19937_64& rng) {
  require_valid(model);
  std::vector<State> out(static_cast<std::size_t>(model.size()));
  out[0] = draw(model.prior, rng);
  for (Index i = 1; i < model.size(); ++i) {
    out[static_cast<std::size_t>(i)] =
        draw(model.transition(i).row(static_cast<std::size_t>(out[static_cast<std::size_t>(i - 1)])),
             rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ChainTables

ChainTables::ChainTables(const ChainModel& model, bool with_max_products)
    : model_(&model), n_(model.size()), with_max_(with_max_products) {
  require_valid(model);
  marginals_.resize(static_cast<std::size_t>(n_));
  marginals_[0] = model.prior;
  for (Index j = 2; j <= n_; ++j) {
    const Matrix& t = model.transition(j - 1);
    const auto& prev = marginals_[static_cast<std::size_t>(j - 2)];
    std::vector<double> cur(t.cols(), 0.0);
    for (std::size_t x = 0; x < t.rows(); ++x) {
      for (std::size_t y = 0; y < t.cols(); ++y) cur[y] += prev[x] * t(x, y);
    }
    marginals_[static_cast<std::size_t>(j - 1)] = std::move(cur);
  }

  const std::size_t pairs = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_ - 1) / 2;
  products_.resize(pairs);
  if (with_max_) max_products_.resize(pairs);
  for (Index a = 1; a < n_; ++a) {
    products_[pair_slot(a, a + 1)] = model.transition(a);
    if (with_max_) max_products_[pair_slot(a, a + 1)] = model.transition(a);
    for (Index b = a + 2; b <= n_; ++b) {
      products_[pair_slot(a, b)] = multiply(products_[pair_slot(a, b - 1)], model.transition(b - 1));
      if (with_max_) {
        max_products_[pair_slot(a, b)] =
            max_multiply(max_products_[pair_slot(a, b - 1)], model.transition(b - 1));
      }
    }
  }

  if (with_max_) {
    forward_max_.resize(static_cast<std::size_t>(n_));
    backward_max_.resize(static_cast<std::size_t>(n_));
    forward_max_[0] = model.prior;
    for (Index j = 2; j <= n_; ++j) {
      const Matrix& t = model.transition(j - 1);
      const auto& prev = forward_max_[static_cast<std::size_t>(j - 2)];
      std::vector<double> cur(t.cols(), 0.0);
      for (std::size_t x = 0; x < t.rows(); ++x) {
        for (std::size_t y = 0; y < t.cols(); ++y) cur[y] = std::max(cur[y], prev[x] * t(x, y));
      }
      forward_max_[static_cast<std::size_t>(j - 1)] = std::move(cur);
    }
    backward_max_[static_cast<std::size_t>(n_ - 1)].assign(static_cast<std::size_t>(states(n_)), 1.0);
    for (Index j = n_ - 1; j >= 1; --j) {
      const Matrix& t = model.transition(j);
      const auto& next = backward_max_[static_cast<std::size_t>(j)];
      std::vector<double> cur(t.rows(), 0.0);
      for (std::size_t x = 0; x < t.rows(); ++x) {
        for (std::size_t y = 0; y < t.cols(); ++y) cur[x] = std::max(cur[x], t(x, y) * next[y]);
      }
      backward_max_[static_cast<std::size_t>(j - 1)] = std::move(cur);
    }
  }
}

std::size_t ChainTables::pair_slot(Index a, Index b) const {
  // Row a (1-based) starts after sum_{r<a} (n - r) entries.
  const std::size_t ua = static_cast<std::size_t>(a - 1);
  const std::size_t n = static_cast<std::size_t>(n_);
  return ua * n - ua * (ua + 1) / 2 + static_cast<std::size_t>(b - a - 1);
}

double ChainTables::step(Index a, State xa, Index b, State xb) const {
  if (a == b) return xa == xb ? 1.0 : 0.0;
  return products_[pair_slot(a, b)](static_cast<std::size_t>(xa), static_cast<std::size_t>(xb));
}

double ChainTables::max_step(Index a, State xa, Index b, State xb) const {
  if (a == b) return xa == xb ? 1.0 : 0.0;
  return max_products_[pair_slot(a, b)](static_cast<std::size_t>(xa), static_cast<std::size_t>(xb));
}

double ChainTables::joint(Index a, State xa, Index b, State xb) const {
  const bool left_dummy = a <= 0 || a > n_;
  const bool right_dummy = b <= 0 || b > n_;
  if (left_dummy && right_dummy) return 1.0;
  if (left_dummy) return marginal(b)[static_cast<std::size_t>(xb)];
  if (right_dummy) return marginal(a)[static_cast<std::size_t>(xa)];
  return marginal(a)[static_cast<std::size_t>(xa)] * step(a, xa, b, xb);
}

void ChainTables::conditional(Index j, Index a, State xa, Index b, State xb,
                              std::span<double> out) const {
  const int d = states(j);
  double total = 0.0;
  for (State x = 0; x < d; ++x) {
    double v = a <= 0 ? marginal(j)[static_cast<std::size_t>(x)] : step(a, xa, j, x);
    if (b <= n_ && v > 0.0) v *= step(j, x, b, xb);
    out[static_cast<std::size_t>(x)] = v;
    total += v;
  }
  for (State x = 0; x < d; ++x) out[static_cast<std::size_t>(x)] /= total;
}

void ChainTables::pair_conditional(Index j, Index a, State xa, Index b, State xb,
                                   Matrix& out) const {
  const Matrix& t = model_->transition(j - 1);
  out = Matrix(t.rows(), t.cols());
  double total = 0.0;
  for (std::size_t xp = 0; xp < t.rows(); ++xp) {
    const State sp = static_cast<State>(xp);
    const double left = a <= 0 ? marginal(j - 1)[xp] : step(a, xa, j - 1, sp);
    if (left == 0.0) continue;
    for (std::size_t x = 0; x < t.cols(); ++x) {
      double v = left * t(xp, x);
      if (b <= n_ && v > 0.0) v *= step(j, static_cast<State>(x), b, xb);
      out(xp, x) = v;
      total += v;
    }
  }
  for (std::size_t xp = 0; xp < t.rows(); ++xp) {
    for (std::size_t x = 0; x < t.cols(); ++x) out(xp, x) /= total;
  }
}

void ChainTables::max_conditional(Index j, Index a, State xa, Index b, State xb,
                                  std::span<double> out) const {
  const int d = states(j);
  const auto& fmax = forward_max_[static_cast<std::size_t>(j - 1)];
  const auto& bmax = backward_max_[static_cast<std::size_t>(j - 1)];
  if (a == j && b == j) {
    std::fill(out.begin(), out.begin() + d, 0.0);
    const std::size_t s = static_cast<std::size_t>(xa);
    out[s] = std::min(1.0, fmax[s] * bmax[s] / marginal(j)[s]);
    return;
  }
  const double norm = joint(a, xa, b, xb);
  for (State x = 0; x < d; ++x) {
    const std::size_t sx = static_cast<std::size_t>(x);
    const double left =
        a <= 0 ? fmax[sx] : forward_max_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(xa)] *
                                max_step(a, xa, j, x);
    const double right =
        b > n_ ? bmax[sx]
               : max_step(j, x, b, xb) * backward_max_[static_cast<std::size_t>(b - 1)][static_cast<std::size_t>(xb)];
    out[sx] = std::min(1.0, left * right / norm);
  }
}

}  // namespace voidp
