#pragma once

// Majority quorum systems over at most 64 servers, with intersection queries.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mwmr {

/// Set of server indices in [0, 64).
class ServerSet {
public:
    static constexpr std::uint32_t kMaxServers = 64;

    constexpr ServerSet() = default;
    constexpr explicit ServerSet(std::uint64_t bits) : bits_(bits) {}
    ServerSet(std::initializer_list<std::uint32_t> members);

    /// {0, 1, ..., n-1}
    static ServerSet first(std::uint32_t n);

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint32_t size() const { return static_cast<std::uint32_t>(std::popcount(bits_)); }
    constexpr bool contains(std::uint32_t s) const { return s < kMaxServers && ((bits_ >> s) & 1U); }
    constexpr bool subset_of(ServerSet other) const { return (bits_ & ~other.bits_) == 0; }

    void insert(std::uint32_t s);
    void erase(std::uint32_t s);

    std::vector<std::uint32_t> members() const;

    friend constexpr ServerSet operator&(ServerSet a, ServerSet b) { return ServerSet(a.bits_ & b.bits_); }
    friend constexpr ServerSet operator|(ServerSet a, ServerSet b) { return ServerSet(a.bits_ | b.bits_); }
    /// Set difference.
    friend constexpr ServerSet operator-(ServerSet a, ServerSet b) { return ServerSet(a.bits_ & ~b.bits_); }
    friend constexpr bool operator==(ServerSet, ServerSet) = default;

private:
    std::uint64_t bits_ = 0;
};

std::string to_string(ServerSet set);

using QuorumIndex = std::size_t;

/// Server universe plus a list of equally sized quorums and a declared intersection degree.
/// Immutable after construction.
class QuorumSystem {
public:
    /// Validates that every quorum has size server_count - f, members are in range
    /// and quorums are pairwise distinct. The degree is taken as declared.
    QuorumSystem(std::uint32_t server_count, std::uint32_t f, std::uint32_t degree,
                 std::vector<ServerSet> quorums);

    std::uint32_t server_count() const { return server_count_; }
    std::uint32_t f() const { return f_; }
    std::uint32_t degree() const { return degree_; }
    std::size_t size() const { return quorums_.size(); }
    ServerSet universe() const { return ServerSet::first(server_count_); }
    ServerSet quorum(QuorumIndex i) const { return quorums_.at(i); }
    std::span<const ServerSet> quorums() const { return quorums_; }

    friend bool operator==(const QuorumSystem&, const QuorumSystem&) = default;

private:
    std::uint32_t server_count_;
    std::uint32_t f_;
    std::uint32_t degree_;
    std::vector<ServerSet> quorums_;
};

/// floor(server_count / f) - 1
std::uint32_t majority_degree(std::uint32_t server_count, std::uint32_t f);

/// All subsets of size server_count - f, in lexicographic order of their sorted members.
/// Throws std::invalid_argument when f == 0, server_count > 64, or the degree is below 2.
QuorumSystem build_majority_system(std::uint32_t server_count, std::uint32_t f);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct IntersectionOptions {
    /// Exhaustive when C(|quorums|, n) does not exceed this; sampled otherwise.
    std::uint64_t budget = 2'000'000;
    std::uint64_t seed = 0x5eed;
};

struct IntersectionCheck {
    bool holds = false;
    bool exhaustive = true;
    std::uint64_t combinations_checked = 0;
    /// A failing choice of quorums, when one was found.
    std::vector<QuorumIndex> counterexample;
};

/// Whether every choice of n quorums has a non-empty intersection.
IntersectionCheck verify_intersection_degree(const QuorumSystem& qs, std::uint32_t n,
                                             const IntersectionOptions& options = {});

/// Intersection of the named quorums. Throws on an empty or out-of-range index set.
ServerSet intersect(const QuorumSystem& qs, std::span<const QuorumIndex> indices);

/// Lowest-index quorum fully contained in `replied`.
std::optional<QuorumIndex> reply_complete(const QuorumSystem& qs, ServerSet replied);

// Quorum config file: "<server_count> <f> <degree>" then one quorum per line.
void write_quorum_file(std::ostream& out, const QuorumSystem& qs);
QuorumSystem read_quorum_file(std::istream& in);
void save_quorum_file(const std::filesystem::path& path, const QuorumSystem& qs);
QuorumSystem load_quorum_file(const std::filesystem::path& path);

}  // namespace mwmr
