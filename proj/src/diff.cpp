#include "fixlocus/diff.hpp"

#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

namespace fixlocus {

const char* to_string(HunkKind k) {
    switch (k) {
    case HunkKind::Inserted:
        return "INSERTED";
    case HunkKind::Deleted:
        return "DELETED";
    case HunkKind::Replaced:
        return "REPLACED";
    }
    return "";
}

std::vector<MethodRef> Sib::callees() const {
    std::vector<MethodRef> out;
    for (const auto& ev : events) {
        if (std::find(out.begin(), out.end(), ev.callee) == out.end()) {
            out.push_back(ev.callee);
        }
    }
    return out;
}

std::vector<DiffKey> project_keys(const Trace& trace, bool value_sensitive) {
    std::vector<DiffKey> keys;
    keys.reserve(trace.events.size());
    for (const auto& ev : trace.events) {
        DiffKey key;
        key.direction = ev.direction;
        key.callee = ev.callee.canonical();
        if (value_sensitive) {
            std::string payload = text::join(ev.args, ";");
            payload += '|';
            switch (ev.ret.kind) {
            case ReturnValue::Kind::Void:
                payload += "void";
                break;
            case ReturnValue::Kind::Unrecorded:
                payload += "?";
                break;
            case ReturnValue::Kind::Value:
                payload += ev.ret.text;
                break;
            }
            key.payload = std::move(payload);
        }
        keys.push_back(std::move(key));
    }
    return keys;
}

namespace {

// Interns DiffKeys so the LCS works over ints.
std::pair<std::vector<int>, std::vector<int>> intern(const std::vector<DiffKey>& a,
                                                     const std::vector<DiffKey>& b) {
    std::map<DiffKey, int> ids;
    auto lookup = [&](const DiffKey& k) {
        auto [it, inserted] = ids.try_emplace(k, static_cast<int>(ids.size()));
        return it->second;
    };
    std::vector<int> ia, ib;
    ia.reserve(a.size());
    ib.reserve(b.size());
    for (const auto& k : a) {
        ia.push_back(lookup(k));
    }
    for (const auto& k : b) {
        ib.push_back(lookup(k));
    }
    return {std::move(ia), std::move(ib)};
}

// Canonical maximum matching: among all LCS alignments, the one whose
// (baseline, failure) index pairs are lexicographically smallest, i.e.
// earlier baseline elements match first, each at its earliest possible
// failure partner.
std::vector<std::pair<std::size_t, std::size_t>> canonical_matching(const std::vector<int>& a,
                                                                    const std::vector<int>& b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();

    // suffix LCS lengths
    std::vector<int> lcs((n + 1) * (m + 1), 0);
    auto L = [&](std::size_t i, std::size_t j) -> int& { return lcs[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            L(i, j) = a[i] == b[j] ? 1 + L(i + 1, j + 1) : std::max(L(i + 1, j), L(i, j + 1));
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> matches;
    std::size_t i = 0, j = 0;
    while (i < n && j < m && L(i, j) > 0) {
        // earliest failure partner for a[i]; matching any later one
        // cannot be part of an optimal alignment if this one is not
        std::size_t f = j;
        while (f < m && b[f] != a[i]) {
            ++f;
        }
        if (f < m && 1 + L(i + 1, f + 1) == L(i, j)) {
            matches.emplace_back(i, f);
            ++i;
            j = f + 1;
        } else {
            ++i;
        }
    }
    return matches;
}

Hunk make_hunk(std::size_t b_begin, std::size_t b_end, std::size_t f_begin, std::size_t f_end) {
    Hunk h;
    h.baseline_span = {b_begin, b_end};
    h.failure_span = {f_begin, f_end};
    if (h.baseline_span.empty()) {
        h.kind = HunkKind::Inserted;
    } else if (h.failure_span.empty()) {
        h.kind = HunkKind::Deleted;
    } else {
        h.kind = HunkKind::Replaced;
    }
    return h;
}

} // namespace

std::vector<Hunk> diff_traces(const Trace& baseline, const Trace& failure, bool value_sensitive) {
    if (baseline.app_package != failure.app_package) {
        throw AppMismatch(baseline.app_package, failure.app_package);
    }
    auto [a, b] = intern(project_keys(baseline, value_sensitive),
                         project_keys(failure, value_sensitive));

    auto matches = canonical_matching(a, b);

    std::vector<Hunk> hunks;
    std::size_t bi = 0, fi = 0;
    for (const auto& [mb, mf] : matches) {
        if (mb > bi || mf > fi) {
            hunks.push_back(make_hunk(bi, mb, fi, mf));
        }
        bi = mb + 1;
        fi = mf + 1;
    }
    if (bi < a.size() || fi < b.size()) {
        hunks.push_back(make_hunk(bi, a.size(), fi, b.size()));
    }
    return hunks;
}

namespace {

std::vector<StackFrame> entry_only_stack(const Trace& baseline, const Trace& failure) {
    MethodRef entry = synthetic_entry_point();
    if (auto e = failure.entry_point()) {
        entry = *e;
    } else if (auto e2 = baseline.entry_point()) {
        entry = *e2;
    }
    return {{entry, origin_of(entry, failure.app_package)}};
}

} // namespace

std::vector<Sib> extract_sibs(const std::vector<Hunk>& hunks, const Trace& baseline,
                              const Trace& failure) {
    std::vector<StackFrame> entry_only = entry_only_stack(baseline, failure);

    std::vector<Sib> sibs;
    sibs.reserve(hunks.size());
    for (const auto& hunk : hunks) {
        Sib sib;
        sib.id = static_cast<int>(sibs.size());
        sib.origin_kind = hunk.kind;
        if (hunk.kind == HunkKind::Deleted) {
            sib.events.assign(baseline.events.begin() + hunk.baseline_span.begin,
                              baseline.events.begin() + hunk.baseline_span.end);
            // missing behavior attaches where it should have occurred:
            // at the last failure event still common to both runs
            sib.anchor_stack = hunk.failure_span.begin > 0
                                   ? failure.events[hunk.failure_span.begin - 1].stack
                                   : entry_only;
        } else {
            sib.events.assign(failure.events.begin() + hunk.failure_span.begin,
                              failure.events.begin() + hunk.failure_span.end);
            sib.anchor_stack = sib.events.front().stack;
        }
        sib.weight = static_cast<int>(sib.events.size());
        sibs.push_back(std::move(sib));
    }
    return sibs;
}

std::vector<Sib> extract_sibs_per_thread(const Trace& baseline, const Trace& failure,
                                         bool value_sensitive) {
    if (baseline.app_package != failure.app_package) {
        throw AppMismatch(baseline.app_package, failure.app_package);
    }
    std::vector<StackFrame> entry_only = entry_only_stack(baseline, failure);

    std::set<std::int64_t> threads;
    for (const auto& ev : baseline.events) {
        threads.insert(ev.thread);
    }
    for (const auto& ev : failure.events) {
        threads.insert(ev.thread);
    }

    auto all_b = project_keys(baseline, value_sensitive);
    auto all_f = project_keys(failure, value_sensitive);

    std::vector<Sib> sibs;
    for (std::int64_t thread : threads) {
        std::vector<std::size_t> b_pos, f_pos;
        std::vector<DiffKey> b_keys, f_keys;
        for (std::size_t i = 0; i < baseline.events.size(); ++i) {
            if (baseline.events[i].thread == thread) {
                b_pos.push_back(i);
                b_keys.push_back(all_b[i]);
            }
        }
        for (std::size_t i = 0; i < failure.events.size(); ++i) {
            if (failure.events[i].thread == thread) {
                f_pos.push_back(i);
                f_keys.push_back(all_f[i]);
            }
        }

        auto [a, b] = intern(b_keys, f_keys);
        auto matches = canonical_matching(a, b);

        std::size_t bi = 0, fi = 0;
        auto emit = [&](std::size_t b_end, std::size_t f_end) {
            if (bi == b_end && fi == f_end) {
                return;
            }
            Hunk hunk = make_hunk(bi, b_end, fi, f_end);
            Sib sib;
            sib.id = static_cast<int>(sibs.size());
            sib.origin_kind = hunk.kind;
            if (hunk.kind == HunkKind::Deleted) {
                for (std::size_t k = hunk.baseline_span.begin; k < hunk.baseline_span.end; ++k) {
                    sib.events.push_back(baseline.events[b_pos[k]]);
                }
                sib.anchor_stack = hunk.failure_span.begin > 0
                                       ? failure.events[f_pos[hunk.failure_span.begin - 1]].stack
                                       : entry_only;
            } else {
                for (std::size_t k = hunk.failure_span.begin; k < hunk.failure_span.end; ++k) {
                    sib.events.push_back(failure.events[f_pos[k]]);
                }
                sib.anchor_stack = sib.events.front().stack;
            }
            sib.weight = static_cast<int>(sib.events.size());
            sibs.push_back(std::move(sib));
        };
        for (const auto& [mb, mf] : matches) {
            emit(mb, mf);
            bi = mb + 1;
            fi = mf + 1;
        }
        emit(b_keys.size(), f_keys.size());
    }
    return sibs;
}

std::string write_sib_report(const std::vector<Sib>& sibs) {
    std::string out = "sib,kind,weight,callees,anchor\n";
    for (const auto& sib : sibs) {
        std::string callees =
            "[" +
            text::join(sib.callees(), ",", [](const MethodRef& m) { return m.canonical(); }) +
            "]";
        std::string anchor =
            "[" +
            text::join(sib.anchor_stack, ",",
                       [](const StackFrame& f) { return f.method.canonical(); }) +
            "]";
        out += std::to_string(sib.id);
        out += ',';
        out += to_string(sib.origin_kind);
        out += ',';
        out += std::to_string(sib.weight);
        out += ',';
        out += text::csv_field(callees);
        out += ',';
        out += text::csv_field(anchor);
        out += '\n';
    }
    return out;
}

} // namespace fixlocus
