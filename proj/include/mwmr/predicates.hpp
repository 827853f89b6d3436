#pragma once

// Write/read predicates of the server-side-ordering algorithms: the k-set-intersection
// test, evaluated exactly (size-ordered subset search) or by the greedy set-cover
// approximation.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mwmr/core.hpp"
#include "mwmr/quorums.hpp"

namespace mwmr {

enum class Engine : std::uint8_t { Exact, Greedy };

/// Work counter; one step is one set intersection or coverage evaluation.
struct EvalStats {
    std::uint64_t steps = 0;
    std::uint64_t predicate_calls = 0;
};

struct PredicateQuery {
    const QuorumSystem& qs;
    QuorumIndex replying_quorum;
    ServerSet ms;  // must be a subset of the replying quorum
    int k;
};

struct PredicateWitness {
    /// Empty when the predicate holds through MS = Q.
    std::vector<QuorumIndex> quorum_indices;

    bool satisfied_by_empty() const { return quorum_indices.empty(); }
};

/// Set-cover instance built for one marked server m.
struct CoverInstance {
    struct CoverSet {
        QuorumIndex source;  // Q_i the set was derived from
        ServerSet elements;  // (U \ M) \ (Q_i \ M)
    };

    ServerSet universe;  // U
    ServerSet marked;    // M
    std::uint32_t m = 0;
    std::vector<CoverSet> family;  // T_m
    int k = 0;
};

/// Members of Q whose reported tag set contains tau. Throws if a member of Q has no reply.
ServerSet compute_ms(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, std::vector<Tag>>& replies,
                     const Tag& tau);

/// Minimum-size A with 1 <= |A| <= k and I(A) ∩ Q ⊆ MS (or the empty witness when MS = Q).
std::optional<PredicateWitness> exact_predicate(const PredicateQuery& query, EvalStats* stats = nullptr);

/// T_m for universe = all servers, marked = ms: one set per quorum containing m.
CoverInstance make_cover_instance(const QuorumSystem& qs, ServerSet marked, std::uint32_t m, int k);

/// Greedy cover of U \ M from T_m: repeatedly picks the set with the most uncovered elements
/// (ties to the lowest quorum index). Returns the source quorums of the picked sets, or
/// nothing when the family cannot cover U \ M. Does not enforce k.
std::optional<std::vector<QuorumIndex>> greedy_cover(const CoverInstance& instance, EvalStats* stats = nullptr);

/// Approximate predicate: accepts only when exact_predicate accepts.
std::optional<PredicateWitness> greedy_predicate(const PredicateQuery& query, EvalStats* stats = nullptr);

std::optional<PredicateWitness> evaluate_predicate(Engine engine, const PredicateQuery& query,
                                                   EvalStats* stats = nullptr);

enum class Speed : std::uint8_t { Fast, Slow };

/// Outcome of a first-round analysis: finish now with `tag`, or run a second round for it.
struct Decision {
    Speed speed = Speed::Slow;
    Tag tag;

    friend bool operator==(const Decision&, const Decision&) = default;
};

inline Decision fast(Tag t) { return {Speed::Fast, t}; }
inline Decision slow(Tag t) { return {Speed::Slow, t}; }

/// floor(n/2) - 1
int write_bound(std::uint32_t degree);
/// floor(n/2) - 2
int read_bound(std::uint32_t degree);

/// Support counts within a replying quorum that make a tag safe to act on.
/// `locked`: no other tag of the same write can be chosen by its writer.
/// `durable`: every later replying quorum still sees the tag as locked.
bool locked_support(const QuorumSystem& qs, ServerSet support);
bool durable_support(const QuorumSystem& qs, ServerSet support);

/// Writer-side decision for write `op` after quorum Q replied with per-server inprogress tags.
/// Candidates are the distinct tags generated for `op`, tried in descending order; the first
/// passing the predicate (bound floor(n/2)-1) with durable support is returned Fast. Otherwise
/// Slow with the candidate held by a strict majority of Q, or the largest candidate.
/// Throws ProtocolError when no reply in Q carries a tag for `op`.
Decision evaluate_pw(const QuorumSystem& qs, QuorumIndex q,
                     const std::map<std::uint32_t, std::vector<Tag>>& inprogress, const WriteId& op,
                     std::uint32_t degree, Engine engine, EvalStats* stats = nullptr);

struct SfwReplyTags {
    std::vector<Tag> inprogress;
    Tag confirmed;
};

/// Reader-side decision. maxConf is the largest confirmed tag in Q. The target is the largest
/// inprogress tag above maxConf with locked support, or maxConf when there is none.
/// A locked target is Fast when the predicate (bound floor(n/2)-2) holds and its support is
/// durable; maxConf is Fast when a locked share of Q confirmed it. Everything else is Slow
/// for the same target.
Decision evaluate_pr(const QuorumSystem& qs, QuorumIndex q, const std::map<std::uint32_t, SfwReplyTags>& replies,
                     std::uint32_t degree, Engine engine, EvalStats* stats = nullptr);

}  // namespace mwmr
