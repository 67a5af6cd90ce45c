#pragma once

// Reference evaluation written directly against index sets: every segment is a
// std::set of timestamps, and every quantity is a set operation or a loop over
// timestamps. It shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

using Set = std::set<long>;

struct Params {
  double theta = 0.5;
  double alpha = 1.0 / 3.0, beta = 1.0 / 3.0, gamma = 1.0 / 3.0;
  long delta = 24;
  long epsilon = 7;
  double k = 0.001;
  double tapr_alpha = 0.5;
  bool max_reward_point = false;
};

struct Fixture {
  long T = 0;
  std::vector<Set> A;       // anomalies
  std::vector<Set> P;       // predictions
  std::vector<Set> Pprime;  // precursor of each prediction (possibly empty)
};

inline std::vector<Set> runs(const std::vector<int>& flags) {
  std::vector<Set> out;
  Set cur;
  for (long i = 0; i < static_cast<long>(flags.size()); ++i) {
    if (flags[i]) {
      cur.insert(i);
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline long common(const Set& x, const Set& y) {
  long n = 0;
  for (long i : x) n += y.count(i);
  return n;
}

// Flagged runs become (p', p) pairs: timestamps before the first anomaly onset
// inside the run form p', the rest p. Runs covering no onset have no p'.
inline Fixture from_flags(const std::vector<int>& flags, const std::vector<int>& labels) {
  Fixture f;
  f.T = static_cast<long>(labels.size());
  f.A = runs(labels);
  for (const Set& run : runs(flags)) {
    long onset = -1;
    for (const Set& a : f.A) {
      const long ta = *a.begin();
      if (run.count(ta)) {
        onset = ta;
        break;
      }
    }
    Set pre, pred;
    for (long i : run) (i < onset ? pre : pred).insert(i);
    f.P.push_back(pred);
    f.Pprime.push_back(pre);
  }
  return f;
}

// Up to delta timestamps after each anomaly, stopping at the series end and at
// the next anomaly.
inline std::vector<Set> ambiguous(const Fixture& f, long delta) {
  std::vector<Set> out;
  for (std::size_t j = 0; j < f.A.size(); ++j) {
    Set s;
    const long stop = j + 1 < f.A.size() ? *f.A[j + 1].begin() : f.T;
    for (long i = *f.A[j].rbegin() + 1; i < stop && i <= *f.A[j].rbegin() + delta; ++i) s.insert(i);
    out.push_back(s);
  }
  return out;
}

inline double sigmoid_weight(long i, long first, long delta) {
  const double x = delta <= 1 ? -6.0 : -6.0 + 12.0 * double(i - first) / double(delta - 1);
  return 1.0 / (1.0 + std::exp(x));
}

inline double overlap(const Set& a, const Set& p, const Set& pp, const Set& amb, long first_amb, long delta,
                      bool with_precursor) {
  double o = double(common(a, p));
  if (with_precursor) o += double(common(a, pp));
  for (long i : amb)
    if (p.count(i)) o += sigmoid_weight(i, first_amb, delta);
  return o;
}

inline double reward(const Set& a, const Set& pp, const Params& q) {
  const long ta = *a.begin();
  double best = 0.0;
  for (long i : pp) {
    if (i >= ta) continue;
    const double lead = double(ta - i);
    const double e = std::exp(-q.k * (lead - q.epsilon) * (lead - q.epsilon));
    if (!q.max_reward_point) return e;  // the set is ordered: first hit is the earliest point
    best = std::max(best, e);
  }
  return best;
}

struct Scores {
  double rd = 0, rp = 0, re = 0, recall = 0;
  double pd = 0, pp = 0, pe = 0, precision = 0;
  double f1 = 0;
};

inline double harmonic(double r, double p) { return r + p > 0 ? 2 * r * p / (r + p) : 0.0; }

inline Scores evaluate(const Fixture& f, const Params& q, bool with_precursor = true) {
  const auto amb = ambiguous(f, q.delta);
  Scores s;
  const double nA = double(f.A.size()), nP = double(f.P.size());
  for (std::size_t j = 0; j < f.A.size(); ++j) {
    const long first_amb = *f.A[j].rbegin() + 1;
    double total = 0, best = 0;
    for (std::size_t m = 0; m < f.P.size(); ++m) {
      total += overlap(f.A[j], f.P[m], f.Pprime[m], amb[j], first_amb, q.delta, with_precursor);
      if (common(f.A[j], f.P[m]) + common(f.A[j], f.Pprime[m]) > 0) best = std::max(best, reward(f.A[j], f.Pprime[m], q));
    }
    const double ratio = total / double(f.A[j].size());
    s.rd += ratio >= q.theta ? 1 : 0;
    s.rp += std::min(1.0, ratio);
    s.re += best;
  }
  s.rd /= nA;
  s.rp /= nA;
  s.re /= nA;
  s.recall = q.alpha * s.rd + q.beta * s.rp + q.gamma * s.re;
  if (!f.P.empty()) {
    for (std::size_t m = 0; m < f.P.size(); ++m) {
      double total = 0, best = 0;
      for (std::size_t j = 0; j < f.A.size(); ++j) {
        total += overlap(f.A[j], f.P[m], f.Pprime[m], amb[j], *f.A[j].rbegin() + 1, q.delta, with_precursor);
        if (common(f.A[j], f.P[m]) + common(f.A[j], f.Pprime[m]) > 0) best = std::max(best, reward(f.A[j], f.Pprime[m], q));
      }
      const double ratio = total / double(f.P[m].size());
      s.pd += ratio >= q.theta ? 1 : 0;
      s.pp += std::min(1.0, ratio);
      s.pe += best;
    }
    s.pd /= nP;
    s.pp /= nP;
    s.pe /= nP;
    s.precision = q.alpha * s.pd + q.beta * s.pp + q.gamma * s.pe;
  }
  s.f1 = harmonic(s.recall, s.precision);
  return s;
}

// TaPR: precursor timestamps join their prediction, no early term,
// weights (tapr_alpha, 1 - tapr_alpha).
inline Scores evaluate_tapr(const Fixture& f, const Params& q) {
  Fixture merged = f;
  for (std::size_t m = 0; m < merged.P.size(); ++m) {
    merged.P[m].insert(f.Pprime[m].begin(), f.Pprime[m].end());
    merged.Pprime[m].clear();
  }
  Params t = q;
  t.alpha = q.tapr_alpha;
  t.beta = 1.0 - q.tapr_alpha;
  t.gamma = 0.0;
  return evaluate(merged, t, false);
}

struct Prf {
  double p = 0, r = 0, f1 = 0;
};

inline Prf pointwise(const std::vector<int>& flags, const std::vector<int>& labels) {
  Set F, L;
  for (long i = 0; i < static_cast<long>(flags.size()); ++i) {
    if (flags[i]) F.insert(i);
    if (labels[i]) L.insert(i);
  }
  const double tp = double(common(F, L));
  Prf out;
  out.p = F.empty() ? 0.0 : tp / double(F.size());
  out.r = L.empty() ? 0.0 : tp / double(L.size());
  out.f1 = harmonic(out.r, out.p);
  return out;
}

inline std::vector<int> adjust(const std::vector<int>& flags, const std::vector<int>& labels, double K) {
  std::vector<int> out = flags;
  for (const Set& a : runs(labels)) {
    long hit = 0;
    for (long i : a) hit += flags[i] ? 1 : 0;
    const double frac = double(hit) / double(a.size());
    const bool go = K == 0.0 ? hit > 0 : frac * 100.0 >= K - 1e-12;
    if (go)
      for (long i : a) out[i] = 1;
  }
  return out;
}

// Area under F1 over K in [0, 100] (rescaled to [0, 1]), K grid 0, 10, ..., 100.
inline double pak_auc(const std::vector<int>& flags, const std::vector<int>& labels) {
  double area = 0, prev = 0;
  for (int K = 0; K <= 100; K += 10) {
    const double f = pointwise(adjust(flags, labels, K), labels).f1;
    if (K > 0) area += 0.05 * (prev + f);
    prev = f;
  }
  return area;
}

}  // namespace oracle
