#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace resque {

/// Batch-structured record of stochastic-gradient oracle traffic.
///
/// query_depth counts sequential batches (the parallel complexity measure),
/// total_queries the individual oracle calls. comp_depth/comp_work account
/// the computation outside oracle queries in units of d-vector operations;
/// scalar bookkeeping is not charged.
struct QueryLedger {
    struct Batch {
        std::uint64_t size;
        std::string tag;
    };

    std::vector<Batch> batches;
    std::uint64_t total_queries = 0;
    std::uint64_t comp_depth = 0;
    std::uint64_t comp_work = 0;
    std::uint64_t truncations = 0;  // desk-scale batch caps that fired

    void add_batch(std::uint64_t size, std::string_view tag) {
        if (size == 0) return;
        batches.push_back({size, std::string(tag)});
        total_queries += size;
    }

    void add_comp(std::uint64_t depth, std::uint64_t work) {
        comp_depth += depth;
        comp_work += work;
    }

    std::uint64_t query_depth() const { return batches.size(); }
};

struct LedgerReport {
    std::uint64_t query_depth;
    std::uint64_t total_queries;
    std::uint64_t comp_depth;
    std::uint64_t comp_work;
};

inline LedgerReport ledger_report(const QueryLedger& ledger) {
    return {ledger.query_depth(), ledger.total_queries, ledger.comp_depth, ledger.comp_work};
}

}  // namespace resque
