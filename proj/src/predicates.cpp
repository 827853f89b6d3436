#include "mwmr/predicates.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>

namespace mwmr {

namespace {

void count(EvalStats* stats, std::uint64_t steps) {
    if (stats) stats->steps += steps;
}

// Lexicographic walk over subsets of a fixed size; returns true at the first subset whose
// intersection with Q lies inside MS.
bool search_size(std::span<const ServerSet> quorums, std::size_t size, std::size_t start, ServerSet acc,
                 ServerSet ms, std::vector<QuorumIndex>& chosen, EvalStats* stats) {
    if (chosen.size() == size) return acc.subset_of(ms);
    const auto remaining = size - chosen.size();
    for (std::size_t i = start; i + remaining <= quorums.size(); ++i) {
        count(stats, 1);
        chosen.push_back(i);
        if (search_size(quorums, size, i + 1, acc & quorums[i], ms, chosen, stats)) return true;
        chosen.pop_back();
    }
    return false;
}

void check_query(const PredicateQuery& query) {
    if (query.replying_quorum >= query.qs.size()) throw std::out_of_range("replying quorum index out of range");
    if (!query.ms.subset_of(query.qs.quorum(query.replying_quorum))) {
        throw std::invalid_argument("MS must be a subset of the replying quorum");
    }
}

}  // namespace

ServerSet compute_ms(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, std::vector<Tag>>& replies,
                     const Tag& tau) {
    ServerSet ms;
    for (auto s : qs.quorum(q).members()) {
        auto it = replies.find(s);
        if (it == replies.end()) {
            throw std::invalid_argument("compute_ms: no reply from quorum member " + std::to_string(s));
        }
        if (std::find(it->second.begin(), it->second.end(), tau) != it->second.end()) ms.insert(s);
    }
    return ms;
}

std::optional<PredicateWitness> exact_predicate(const PredicateQuery& query, EvalStats* stats) {
    check_query(query);
    if (stats) ++stats->predicate_calls;
    const auto q = query.qs.quorum(query.replying_quorum);
    if (query.ms == q) return PredicateWitness{};
    if (query.k < 1) return std::nullopt;
    const auto quorums = query.qs.quorums();
    const auto max_size = std::min<std::size_t>(static_cast<std::size_t>(query.k), quorums.size());
    std::vector<QuorumIndex> chosen;
    for (std::size_t size = 1; size <= max_size; ++size) {
        chosen.clear();
        if (search_size(quorums, size, 0, q, query.ms, chosen, stats)) return PredicateWitness{chosen};
    }
    return std::nullopt;
}

CoverInstance make_cover_instance(const QuorumSystem& qs, ServerSet marked, std::uint32_t m, int k) {
    CoverInstance inst;
    inst.universe = qs.universe();
    inst.marked = marked;
    inst.m = m;
    inst.k = k;
    const auto unmarked = inst.universe - marked;
    const auto quorums = qs.quorums();
    for (std::size_t i = 0; i < quorums.size(); ++i) {
        if (quorums[i].contains(m)) inst.family.push_back({i, unmarked - (quorums[i] - marked)});
    }
    return inst;
}

std::optional<std::vector<QuorumIndex>> greedy_cover(const CoverInstance& instance, EvalStats* stats) {
    auto uncovered = instance.universe - instance.marked;
    std::vector<bool> picked(instance.family.size(), false);
    std::vector<QuorumIndex> solution;
    while (!uncovered.empty()) {
        std::size_t best = instance.family.size();
        std::uint32_t best_gain = 0;
        for (std::size_t i = 0; i < instance.family.size(); ++i) {
            if (picked[i]) continue;
            count(stats, 1);
            const auto gain = (instance.family[i].elements & uncovered).size();
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        if (best_gain == 0) return std::nullopt;
        picked[best] = true;
        uncovered = uncovered - instance.family[best].elements;
        solution.push_back(instance.family[best].source);
    }
    return solution;
}

std::optional<PredicateWitness> greedy_predicate(const PredicateQuery& query, EvalStats* stats) {
    check_query(query);
    if (stats) ++stats->predicate_calls;
    const auto q = query.qs.quorum(query.replying_quorum);
    if (query.ms == q) return PredicateWitness{};
    if (query.k < 1) return std::nullopt;
    for (auto m : query.ms.members()) {
        const auto inst = make_cover_instance(query.qs, query.ms, m, query.k);
        count(stats, query.qs.size());
        auto cover = greedy_cover(inst, stats);
        if (cover && cover->size() <= static_cast<std::size_t>(query.k)) {
            std::sort(cover->begin(), cover->end());
            return PredicateWitness{std::move(*cover)};
        }
    }
    return std::nullopt;
}

std::optional<PredicateWitness> evaluate_predicate(Engine engine, const PredicateQuery& query, EvalStats* stats) {
    return engine == Engine::Exact ? exact_predicate(query, stats) : greedy_predicate(query, stats);
}

int write_bound(std::uint32_t degree) { return static_cast<int>(degree / 2) - 1; }
int read_bound(std::uint32_t degree) { return static_cast<int>(degree / 2) - 2; }

bool locked_support(const QuorumSystem& qs, ServerSet support) {
    return 2 * support.size() > qs.server_count() + qs.f();
}

bool durable_support(const QuorumSystem& qs, ServerSet support) {
    return 2 * support.size() > qs.server_count() + 3 * qs.f();
}

Decision evaluate_pw(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, std::vector<Tag>>& inprogress,
                     const WriteId& op, std::uint32_t degree, Engine engine, EvalStats* stats) {
    const auto quorum = qs.quorum(q);
    std::set<Tag, std::greater<>> candidates;
    for (auto s : quorum.members()) {
        auto it = inprogress.find(s);
        if (it == inprogress.end()) throw std::invalid_argument("evaluate_pw: missing reply from quorum member");
        for (const auto& t : it->second) {
            if (t.write_id() == op) candidates.insert(t);
        }
    }
    if (candidates.empty()) {
        throw ProtocolError("evaluate_pw: no server in the replying quorum reported a tag for the write");
    }
    const int k = write_bound(degree);
    std::optional<Tag> majority;
    for (const auto& tau : candidates) {
        const auto ms = compute_ms(qs, q, inprogress, tau);
        if (evaluate_predicate(engine, PredicateQuery{qs, q, ms, k}, stats) && durable_support(qs, ms)) {
            return fast(tau);
        }
        if (2 * ms.size() > quorum.size()) majority = tau;
    }
    return slow(majority.value_or(*candidates.begin()));
}

Decision evaluate_pr(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, SfwReplyTags>& replies,
                     std::uint32_t degree, Engine engine, EvalStats* stats) {
    const auto quorum = qs.quorum(q);
    std::map<std::uint32_t, std::vector<Tag>> inprogress;
    Tag max_conf = kInitialTag;
    for (auto s : quorum.members()) {
        auto it = replies.find(s);
        if (it == replies.end()) throw std::invalid_argument("evaluate_pr: missing reply from quorum member");
        inprogress[s] = it->second.inprogress;
        max_conf = std::max(max_conf, it->second.confirmed);
    }
    std::set<Tag, std::greater<>> candidates;
    for (const auto& [s, tags] : inprogress) {
        for (const auto& t : tags) {
            if (t > max_conf) candidates.insert(t);
        }
    }
    count(stats, quorum.size());
    for (const auto& tau : candidates) {
        const auto ms = compute_ms(qs, q, inprogress, tau);
        if (!locked_support(qs, ms)) continue;
        const bool ok = evaluate_predicate(engine, PredicateQuery{qs, q, ms, read_bound(degree)}, stats).has_value();
        return ok && durable_support(qs, ms) ? fast(tau) : slow(tau);
    }
    ServerSet confirmed_by;
    for (auto s : quorum.members()) {
        if (replies.at(s).confirmed == max_conf) confirmed_by.insert(s);
    }
    return locked_support(qs, confirmed_by) ? fast(max_conf) : slow(max_conf);
}

}  // namespace mwmr
