#include <algorithm>
#include <cstdint>
#include <random>

#include "htnsat/sat.hpp"

namespace htnsat::sat {

namespace {

// Internal literal: 2 * var + sign, var 0-based, sign 1 = negated.
using ILit = int;
constexpr int kNoReason = -1;

constexpr std::uint8_t kFalse = 0;
constexpr std::uint8_t kTrue = 1;
constexpr std::uint8_t kUndef = 2;

inline ILit to_internal(Lit l) { return 2 * (l.var() - 1) + (l.positive() ? 0 : 1); }
inline int var_of(ILit x) { return x >> 1; }
inline ILit negate(ILit x) { return x ^ 1; }

double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    double r = 1;
    for (int i = 0; i < seq; ++i) r *= y;
    return r;
}

class Cdcl final : public Backend {
public:
    explicit Cdcl(const CdclOptions& opts) : opts_(opts), rng_(opts.seed) {}

    void new_var() override {
        int v = static_cast<int>(assigns_.size());
        assigns_.push_back(kUndef);
        level_.push_back(0);
        reason_.push_back(kNoReason);
        phase_.push_back(1);  // negated literal first
        seen_.push_back(0);
        double act = 0;
        if (opts_.seed != 0) act = std::uniform_real_distribution<double>(0, 1e-5)(rng_);
        activity_.push_back(act);
        heap_pos_.push_back(-1);
        watches_.emplace_back();
        watches_.emplace_back();
        model_.push_back(false);
        heap_insert(v);
    }

    void add_clause(std::span<const Lit> clause) override {
        if (!ok_) return;
        std::vector<ILit> lits;
        for (Lit l : clause) lits.push_back(to_internal(l));
        std::sort(lits.begin(), lits.end());
        lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
        std::vector<ILit> kept;
        for (std::size_t i = 0; i < lits.size(); ++i) {
            if (i + 1 < lits.size() && lits[i + 1] == negate(lits[i])) return;  // tautology
            std::uint8_t v = value(lits[i]);
            if (v == kTrue) return;
            if (v == kUndef) kept.push_back(lits[i]);
        }
        if (kept.empty()) {
            ok_ = false;
            return;
        }
        if (kept.size() == 1) {
            enqueue(kept[0], kNoReason);
            if (propagate() != kNoReason) ok_ = false;
            return;
        }
        attach(new_clause(std::move(kept), false));
    }

    Result solve(std::span<const Lit> assumptions, std::optional<Deadline> deadline) override {
        if (!ok_) return Result::Unsat;
        assumptions_.clear();
        for (Lit l : assumptions) assumptions_.push_back(to_internal(l));
        deadline_ = deadline;
        if (max_learnts_ == 0) max_learnts_ = std::max<double>(2000, static_cast<double>(clauses_.size()) / 3);

        Result result = Result::Unknown;
        for (int restart = 0; result == Result::Unknown; ++restart) {
            std::uint64_t budget = static_cast<std::uint64_t>(luby(2, restart) * 100);
            int r = search(budget);
            if (r == kTrue) result = Result::Sat;
            else if (r == kFalse) result = Result::Unsat;
            else if (timed_out_) break;
        }
        timed_out_ = false;
        cancel_until(0);
        return result;
    }

    bool model_value(int var) const override { return model_[var - 1]; }
    std::uint64_t conflicts() const override { return conflicts_; }

private:
    struct ClauseData {
        std::vector<ILit> lits;
        double activity = 0;
        bool learnt = false;
        bool deleted = false;
    };
    struct Watcher {
        int cref;
        ILit blocker;
    };

    std::uint8_t value(ILit x) const {
        std::uint8_t v = assigns_[var_of(x)];
        return v == kUndef ? kUndef : static_cast<std::uint8_t>(v ^ (x & 1));
    }
    int decision_level() const { return static_cast<int>(trail_lim_.size()); }

    int new_clause(std::vector<ILit> lits, bool learnt) {
        clauses_.push_back(ClauseData{std::move(lits), 0, learnt, false});
        int cref = static_cast<int>(clauses_.size()) - 1;
        if (learnt) learnts_.push_back(cref);
        return cref;
    }
    void attach(int cref) {
        const auto& c = clauses_[cref].lits;
        watches_[c[0]].push_back({cref, c[1]});
        watches_[c[1]].push_back({cref, c[0]});
    }

    void enqueue(ILit x, int reason) {
        int v = var_of(x);
        assigns_[v] = static_cast<std::uint8_t>((x & 1) ? kFalse : kTrue);
        level_[v] = decision_level();
        reason_[v] = reason;
        trail_.push_back(x);
    }

    int propagate() {
        int conflict = kNoReason;
        while (qhead_ < trail_.size()) {
            ILit p = trail_[qhead_++];
            ILit false_lit = negate(p);
            auto& ws = watches_[false_lit];
            std::size_t i = 0, j = 0;
            while (i < ws.size()) {
                Watcher w = ws[i++];
                if (value(w.blocker) == kTrue) {
                    ws[j++] = w;
                    continue;
                }
                auto& c = clauses_[w.cref].lits;
                if (c[0] == false_lit) std::swap(c[0], c[1]);
                ILit first = c[0];
                if (first != w.blocker && value(first) == kTrue) {
                    ws[j++] = {w.cref, first};
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.size(); ++k) {
                    if (value(c[k]) != kFalse) {
                        std::swap(c[1], c[k]);
                        watches_[c[1]].push_back({w.cref, first});
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[j++] = {w.cref, first};
                if (value(first) == kFalse) {
                    conflict = w.cref;
                    qhead_ = trail_.size();
                    while (i < ws.size()) ws[j++] = ws[i++];
                } else {
                    enqueue(first, w.cref);
                }
            }
            ws.resize(j);
            ++propagations_;
        }
        return conflict;
    }

    void cancel_until(int level) {
        if (decision_level() <= level) return;
        for (std::size_t c = trail_.size(); c > trail_lim_[level]; --c) {
            int v = var_of(trail_[c - 1]);
            assigns_[v] = kUndef;
            reason_[v] = kNoReason;
            phase_[v] = static_cast<std::uint8_t>(trail_[c - 1] & 1);
            if (heap_pos_[v] < 0) heap_insert(v);
        }
        trail_.resize(trail_lim_[level]);
        trail_lim_.resize(level);
        qhead_ = trail_.size();
    }

    // ---- activity heap: max activity, ties broken by lowest index ----

    bool heap_less(int a, int b) const {
        return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b);
    }
    void heap_up(std::size_t i) {
        int v = heap_[i];
        while (i > 0) {
            std::size_t parent = (i - 1) / 2;
            if (!heap_less(v, heap_[parent])) break;
            heap_[i] = heap_[parent];
            heap_pos_[heap_[i]] = static_cast<int>(i);
            i = parent;
        }
        heap_[i] = v;
        heap_pos_[v] = static_cast<int>(i);
    }
    void heap_down(std::size_t i) {
        int v = heap_[i];
        for (;;) {
            std::size_t child = 2 * i + 1;
            if (child >= heap_.size()) break;
            if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child])) ++child;
            if (!heap_less(heap_[child], v)) break;
            heap_[i] = heap_[child];
            heap_pos_[heap_[i]] = static_cast<int>(i);
            i = child;
        }
        heap_[i] = v;
        heap_pos_[v] = static_cast<int>(i);
    }
    void heap_insert(int v) {
        heap_pos_[v] = static_cast<int>(heap_.size());
        heap_.push_back(v);
        heap_up(heap_.size() - 1);
    }
    int heap_pop() {
        int top = heap_[0];
        heap_pos_[top] = -1;
        int last = heap_.back();
        heap_.pop_back();
        if (!heap_.empty()) {
            heap_[0] = last;
            heap_pos_[last] = 0;
            heap_down(0);
        }
        return top;
    }

    void bump_var(int v) {
        if ((activity_[v] += var_inc_) > 1e100) {
            for (double& a : activity_) a *= 1e-100;
            var_inc_ *= 1e-100;
        }
        if (heap_pos_[v] >= 0) heap_up(static_cast<std::size_t>(heap_pos_[v]));
    }
    void bump_clause(ClauseData& c) {
        if ((c.activity += cla_inc_) > 1e20) {
            for (int cref : learnts_) clauses_[cref].activity *= 1e-20;
            cla_inc_ *= 1e-20;
        }
    }

    // First-UIP conflict analysis with local minimization.
    void analyze(int conflict, std::vector<ILit>& learnt, int& backtrack) {
        learnt.assign(1, 0);
        int path = 0;
        ILit p = -1;
        std::size_t index = trail_.size();
        do {
            ClauseData& c = clauses_[conflict];
            if (c.learnt) bump_clause(c);
            for (std::size_t k = (p == -1 ? 0 : 1); k < c.lits.size(); ++k) {
                ILit q = c.lits[k];
                int v = var_of(q);
                if (seen_[v] || level_[v] == 0) continue;
                bump_var(v);
                seen_[v] = 1;
                if (level_[v] >= decision_level()) ++path;
                else learnt.push_back(q);
            }
            while (!seen_[var_of(trail_[--index])]) {
            }
            p = trail_[index];
            conflict = reason_[var_of(p)];
            seen_[var_of(p)] = 0;
            --path;
        } while (path > 0);
        learnt[0] = negate(p);

        to_clear_.assign(learnt.begin(), learnt.end());
        std::size_t keep = 1;
        for (std::size_t k = 1; k < learnt.size(); ++k) {
            int r = reason_[var_of(learnt[k])];
            bool redundant = r != kNoReason;
            if (redundant) {
                const auto& rl = clauses_[r].lits;
                for (std::size_t m = 1; m < rl.size(); ++m) {
                    int v = var_of(rl[m]);
                    if (!seen_[v] && level_[v] > 0) {
                        redundant = false;
                        break;
                    }
                }
            }
            if (!redundant) learnt[keep++] = learnt[k];
        }
        learnt.resize(keep);
        for (ILit x : to_clear_) seen_[var_of(x)] = 0;

        backtrack = 0;
        if (learnt.size() > 1) {
            std::size_t best = 1;
            for (std::size_t k = 2; k < learnt.size(); ++k)
                if (level_[var_of(learnt[k])] > level_[var_of(learnt[best])]) best = k;
            std::swap(learnt[1], learnt[best]);
            backtrack = level_[var_of(learnt[1])];
        }
    }

    bool locked(int cref) const {
        const auto& c = clauses_[cref].lits;
        int v = var_of(c[0]);
        return reason_[v] == cref && value(c[0]) == kTrue;
    }

    void reduce_learnts() {
        std::vector<int> sorted = learnts_;
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
            const auto& ca = clauses_[a];
            const auto& cb = clauses_[b];
            if (ca.activity != cb.activity) return ca.activity < cb.activity;
            return a < b;
        });
        std::size_t half = sorted.size() / 2;
        std::vector<int> kept;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            int cref = sorted[i];
            if (i < half && clauses_[cref].lits.size() > 2 && !locked(cref)) {
                clauses_[cref].deleted = true;
                clauses_[cref].lits.clear();
                clauses_[cref].lits.shrink_to_fit();
            } else {
                kept.push_back(cref);
            }
        }
        std::sort(kept.begin(), kept.end());
        learnts_ = std::move(kept);
        for (auto& ws : watches_)
            ws.erase(std::remove_if(ws.begin(), ws.end(), [&](const Watcher& w) { return clauses_[w.cref].deleted; }),
                     ws.end());
    }

    bool out_of_time() {
        if (!deadline_) return false;
        if ((++clock_checks_ & 255) != 0) return false;
        if (std::chrono::steady_clock::now() >= *deadline_) timed_out_ = true;
        return timed_out_;
    }

    // kTrue = model found, kFalse = unsatisfiable under assumptions, kUndef = restart or timeout.
    int search(std::uint64_t budget) {
        std::uint64_t local = 0;
        std::vector<ILit> learnt;
        for (;;) {
            int conflict = propagate();
            if (conflict != kNoReason) {
                ++conflicts_;
                ++local;
                if (decision_level() == 0) {
                    ok_ = false;
                    return kFalse;
                }
                int backtrack = 0;
                analyze(conflict, learnt, backtrack);
                cancel_until(backtrack);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], kNoReason);
                } else {
                    int cref = new_clause(learnt, true);
                    attach(cref);
                    bump_clause(clauses_[cref]);
                    enqueue(learnt[0], cref);
                }
                var_inc_ /= 0.95;
                cla_inc_ /= 0.999;
                if (out_of_time()) return kUndef;
                continue;
            }
            if (local >= budget || out_of_time()) {
                cancel_until(0);
                return kUndef;
            }
            if (opts_.reduce_learnts && static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >=
                                            max_learnts_) {
                reduce_learnts();
                max_learnts_ *= 1.1;
            }
            ILit next = -1;
            while (decision_level() < static_cast<int>(assumptions_.size())) {
                ILit a = assumptions_[static_cast<std::size_t>(decision_level())];
                std::uint8_t v = value(a);
                if (v == kTrue) {
                    trail_lim_.push_back(trail_.size());
                } else if (v == kFalse) {
                    return kFalse;
                } else {
                    next = a;
                    break;
                }
            }
            if (next == -1) {
                int v = -1;
                while (!heap_.empty()) {
                    int cand = heap_pop();
                    if (assigns_[cand] == kUndef) {
                        v = cand;
                        break;
                    }
                }
                if (v < 0) {
                    for (std::size_t k = 0; k < assigns_.size(); ++k) model_[k] = assigns_[k] == kTrue;
                    return kTrue;
                }
                next = 2 * v + phase_[v];
            }
            trail_lim_.push_back(trail_.size());
            enqueue(next, kNoReason);
        }
    }

    CdclOptions opts_;
    std::mt19937_64 rng_;
    bool ok_ = true;
    std::vector<std::uint8_t> assigns_;
    std::vector<int> level_;
    std::vector<int> reason_;
    std::vector<std::uint8_t> phase_;
    std::vector<std::uint8_t> seen_;
    std::vector<double> activity_;
    std::vector<int> heap_;
    std::vector<int> heap_pos_;
    std::vector<std::vector<Watcher>> watches_;
    std::vector<ClauseData> clauses_;
    std::vector<int> learnts_;
    std::vector<ILit> trail_;
    std::vector<std::size_t> trail_lim_;
    std::size_t qhead_ = 0;
    std::vector<ILit> assumptions_;
    std::vector<ILit> to_clear_;
    std::vector<bool> model_;
    double var_inc_ = 1;
    double cla_inc_ = 1;
    double max_learnts_ = 0;
    std::uint64_t conflicts_ = 0;
    std::uint64_t propagations_ = 0;
    std::uint64_t clock_checks_ = 0;
    std::optional<Deadline> deadline_;
    bool timed_out_ = false;
};

}  // namespace

std::unique_ptr<Backend> make_cdcl(const CdclOptions& opts) { return std::make_unique<Cdcl>(opts); }

}  // namespace htnsat::sat
