#include "mwmr/quorums.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mwmr {

ServerSet::ServerSet(std::initializer_list<std::uint32_t> members) {
    for (auto s : members) insert(s);
}

ServerSet ServerSet::first(std::uint32_t n) {
    if (n > kMaxServers) throw std::invalid_argument("at most 64 servers are supported");
    return ServerSet(n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
}

void ServerSet::insert(std::uint32_t s) {
    if (s >= kMaxServers) throw std::out_of_range("server index out of range");
    bits_ |= std::uint64_t{1} << s;
}

void ServerSet::erase(std::uint32_t s) {
    if (s < kMaxServers) bits_ &= ~(std::uint64_t{1} << s);
}

std::vector<std::uint32_t> ServerSet::members() const {
    std::vector<std::uint32_t> out;
    out.reserve(size());
    for (auto b = bits_; b != 0; b &= b - 1) {
        out.push_back(static_cast<std::uint32_t>(std::countr_zero(b)));
    }
    return out;
}

std::string to_string(ServerSet set) {
    std::string out = "{";
    bool first = true;
    for (auto s : set.members()) {
        if (!first) out += ",";
        out += std::to_string(s);
        first = false;
    }
    return out + "}";
}

QuorumSystem::QuorumSystem(std::uint32_t server_count, std::uint32_t f, std::uint32_t degree,
                           std::vector<ServerSet> quorums)
    : server_count_(server_count), f_(f), degree_(degree), quorums_(std::move(quorums)) {
    if (server_count_ == 0 || server_count_ > ServerSet::kMaxServers) {
        throw std::invalid_argument("server count must be in [1, 64]");
    }
    if (f_ >= server_count_) throw std::invalid_argument("f must be smaller than the server count");
    if (quorums_.empty()) throw std::invalid_argument("quorum system has no quorums");
    const auto universe = ServerSet::first(server_count_);
    std::set<std::uint64_t> seen;
    for (const auto& q : quorums_) {
        if (!q.subset_of(universe)) throw std::invalid_argument("quorum member out of range: " + to_string(q));
        if (q.size() != server_count_ - f_) {
            throw std::invalid_argument("quorum " + to_string(q) + " does not have size server_count - f");
        }
        if (!seen.insert(q.bits()).second) throw std::invalid_argument("duplicate quorum " + to_string(q));
    }
}

std::uint32_t majority_degree(std::uint32_t server_count, std::uint32_t f) {
    if (f == 0) throw std::invalid_argument("f must be at least 1");
    const auto ratio = server_count / f;
    return ratio == 0 ? 0 : ratio - 1;
}

QuorumSystem build_majority_system(std::uint32_t server_count, std::uint32_t f) {
    if (f == 0) throw std::invalid_argument("f must be at least 1");
    if (server_count > ServerSet::kMaxServers) throw std::invalid_argument("at most 64 servers are supported");
    const auto degree = majority_degree(server_count, f);
    if (degree < 2) {
        throw std::invalid_argument("floor(servers / f) - 1 must be at least 2");
    }
    const std::uint32_t k = server_count - f;
    std::vector<ServerSet> quorums;
    quorums.reserve(static_cast<std::size_t>(binomial(server_count, f)));
    // Lexicographic k-combinations of [0, server_count).
    std::vector<std::uint32_t> idx(k);
    for (std::uint32_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        ServerSet q;
        for (auto s : idx) q.insert(s);
        quorums.push_back(q);
        std::int64_t i = static_cast<std::int64_t>(k) - 1;
        while (i >= 0 && idx[i] == server_count - k + static_cast<std::uint32_t>(i)) --i;
        if (i < 0) break;
        ++idx[i];
        for (auto j = static_cast<std::uint32_t>(i) + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return QuorumSystem(server_count, f, degree, std::move(quorums));
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

namespace {

// Depth-first walk over n-combinations; stops at the first empty intersection.
bool all_combinations_intersect(std::span<const ServerSet> quorums, std::uint32_t n, std::size_t start,
                                ServerSet acc, std::vector<QuorumIndex>& chosen, std::uint64_t& checked) {
    if (chosen.size() == n) {
        ++checked;
        return !acc.empty();
    }
    const auto remaining = n - chosen.size();
    for (std::size_t i = start; i + remaining <= quorums.size(); ++i) {
        chosen.push_back(i);
        if (!all_combinations_intersect(quorums, n, i + 1, acc & quorums[i], chosen, checked)) return false;
        chosen.pop_back();
    }
    return true;
}

}  // namespace

IntersectionCheck verify_intersection_degree(const QuorumSystem& qs, std::uint32_t n,
                                             const IntersectionOptions& options) {
    if (n < 2) throw std::invalid_argument("intersection degree must be at least 2");
    IntersectionCheck result;
    const auto quorums = qs.quorums();
    if (n > quorums.size()) {
        // Fewer than n quorums: the condition is vacuous.
        result.holds = true;
        return result;
    }
    if (binomial(quorums.size(), n) <= options.budget) {
        std::vector<QuorumIndex> chosen;
        result.holds = all_combinations_intersect(quorums, n, 0, qs.universe(), chosen, result.combinations_checked);
        if (!result.holds) result.counterexample = chosen;
        return result;
    }
    result.exhaustive = false;
    result.holds = true;
    std::mt19937_64 rng(options.seed);
    std::vector<QuorumIndex> pool(quorums.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::uint64_t sample = 0; sample < options.budget; ++sample) {
        // Partial Fisher-Yates: first n entries of pool form the sample.
        ServerSet acc = qs.universe();
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            acc = acc & quorums[pool[i]];
        }
        ++result.combinations_checked;
        if (acc.empty()) {
            result.holds = false;
            result.counterexample.assign(pool.begin(), pool.begin() + n);
            std::sort(result.counterexample.begin(), result.counterexample.end());
            break;
        }
    }
    return result;
}

ServerSet intersect(const QuorumSystem& qs, std::span<const QuorumIndex> indices) {
    if (indices.empty()) throw std::invalid_argument("intersect: empty quorum index set");
    ServerSet acc = qs.universe();
    for (auto i : indices) {
        if (i >= qs.size()) throw std::out_of_range("intersect: quorum index out of range");
        acc = acc & qs.quorum(i);
    }
    return acc;
}

std::optional<QuorumIndex> reply_complete(const QuorumSystem& qs, ServerSet replied) {
    const auto quorums = qs.quorums();
    for (std::size_t i = 0; i < quorums.size(); ++i) {
        if (quorums[i].subset_of(replied)) return i;
    }
    return std::nullopt;
}

void write_quorum_file(std::ostream& out, const QuorumSystem& qs) {
    out << qs.server_count() << ' ' << qs.f() << ' ' << qs.degree() << '\n';
    for (const auto& q : qs.quorums()) {
        bool first = true;
        for (auto s : q.members()) {
            if (!first) out << ' ';
            out << s;
            first = false;
        }
        out << '\n';
    }
}

QuorumSystem read_quorum_file(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("quorum file: missing header line");
    std::istringstream header(line);
    std::uint32_t servers = 0;
    std::uint32_t f = 0;
    std::uint32_t degree = 0;
    if (!(header >> servers >> f >> degree)) {
        throw std::runtime_error("quorum file: header must be '<server_count> <f> <degree>'");
    }
    std::vector<ServerSet> quorums;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        ServerSet q;
        std::uint32_t s = 0;
        while (row >> s) {
            if (s >= servers) throw std::runtime_error("quorum file: server index out of range");
            q.insert(s);
        }
        if (!row.eof()) throw std::runtime_error("quorum file: bad quorum line '" + line + "'");
        quorums.push_back(q);
    }
    return QuorumSystem(servers, f, degree, std::move(quorums));
}

void save_quorum_file(const std::filesystem::path& path, const QuorumSystem& qs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_quorum_file(out, qs);
}

QuorumSystem load_quorum_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_quorum_file(in);
}

}  // namespace mwmr
