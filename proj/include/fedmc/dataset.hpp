#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/rng.hpp"

namespace fedmc {

enum class RatingsFormat {
    movielens_delimited, // user::item::rating::timestamp, timestamp ignored
    triplet_csv,         // header "user,item,rating", one record per line
};

/// Loaded ratings with the id maps produced by compaction: user_ids[t] /
/// item_ids[j] are the original ids of compacted row t / column j.
struct RatingsData {
    MaskedMatrix matrix;
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> item_ids;
    std::size_t duplicates_dropped = 0;
};

struct DatasetSplit {
    MaskedMatrix train;
    MaskedMatrix test;
    std::uint64_t seed = 0;
};

/// Contiguous row blocks M_1..M_p over a (optionally shuffled) row order.
struct ClientPartition {
    std::vector<std::size_t> row_order; // permutation of [0, m)
    std::vector<std::size_t> boundaries; // p+1 offsets into row_order
    std::vector<MaskedMatrix> blocks;

    std::size_t clients() const { return blocks.size(); }
};

namespace detail {

struct RawRecord {
    std::int64_t user;
    std::int64_t item;
    double rating;
};

inline std::int64_t parse_id(const std::string& field, std::size_t line, const char* what) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("cannot parse ") + what + " '" + field + "'", line);
    }
    if (pos != field.size())
        throw ParseError(std::string("trailing characters in ") + what + " '" + field + "'", line);
    if (v < 0) throw ParseError(std::string("negative ") + what + " '" + field + "'", line);
    return v;
}

inline double parse_rating(const std::string& field, std::size_t line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw ParseError("cannot parse rating '" + field + "'", line);
    }
    if (pos != field.size())
        throw ParseError("trailing characters in rating '" + field + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite rating '" + field + "'", line);
    return v;
}

inline std::vector<std::string> split_fields(const std::string& line, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = line.find(sep, start);
        if (at == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, at - start));
        start = at + sep.size();
    }
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace detail

/// Reads a ratings file and compacts user/item ids to dense 0-based indices
/// (sorted by original id). Duplicate (user, item) pairs keep the last
/// occurrence and emit a warning on `warnings`.
inline RatingsData load_ratings(const std::string& path, RatingsFormat format,
                                std::ostream& warnings = std::cerr) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open ratings file '" + path + "'");

    std::vector<detail::RawRecord> records;
    std::string line;
    std::size_t lineno = 0;

    if (format == RatingsFormat::triplet_csv) {
        if (!std::getline(in, line)) throw ConfigError("empty dataset: '" + path + "'");
        ++lineno;
        if (detail::strip_cr(line) != "user,item,rating")
            throw ParseError("expected header 'user,item,rating', got '" + line + "'", lineno);
    }

    const std::string sep = format == RatingsFormat::movielens_delimited ? "::" : ",";
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_fields(line, sep);
        const std::size_t min_fields = 3;
        if (fields.size() < min_fields)
            throw ParseError("expected at least 3 fields, got " + std::to_string(fields.size()),
                             lineno);
        if (format == RatingsFormat::triplet_csv && fields.size() != 3)
            throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), lineno);
        records.push_back({detail::parse_id(fields[0], lineno, "user id"),
                           detail::parse_id(fields[1], lineno, "item id"),
                           detail::parse_rating(fields[2], lineno)});
    }
    if (records.empty()) throw ConfigError("empty dataset: '" + path + "'");

    // Keep-last dedup, then compact ids in ascending original-id order.
    std::map<std::pair<std::int64_t, std::int64_t>, double> by_key;
    std::size_t duplicates = 0;
    for (const detail::RawRecord& rec : records) {
        auto [it, inserted] = by_key.insert_or_assign({rec.user, rec.item}, rec.rating);
        (void)it;
        if (!inserted) ++duplicates;
    }
    if (duplicates > 0)
        warnings << "warning: " << duplicates << " duplicate (user,item) ratings in '" << path
                 << "', keeping the last occurrence of each\n";

    std::map<std::int64_t, std::size_t> user_index;
    std::map<std::int64_t, std::size_t> item_index;
    for (const auto& [key, rating] : by_key) {
        (void)rating;
        user_index.emplace(key.first, 0);
        item_index.emplace(key.second, 0);
    }
    RatingsData out;
    out.user_ids.reserve(user_index.size());
    for (auto& [id, idx] : user_index) {
        idx = out.user_ids.size();
        out.user_ids.push_back(id);
    }
    out.item_ids.reserve(item_index.size());
    for (auto& [id, idx] : item_index) {
        idx = out.item_ids.size();
        out.item_ids.push_back(id);
    }

    std::vector<MaskedMatrix::Entry> entries;
    entries.reserve(by_key.size());
    for (const auto& [key, rating] : by_key)
        entries.push_back({user_index[key.first], item_index[key.second], rating});
    out.matrix = MaskedMatrix(out.user_ids.size(), out.item_ids.size(), std::move(entries));
    out.duplicates_dropped = duplicates;
    return out;
}

/// Uniform entry-level split into train/test. Exact-count: round(fraction*nnz)
/// entries (clamped so neither side is empty) go to train. Reproducible and
/// bit-exact given (entries, seed).
inline DatasetSplit split_train_test(const MaskedMatrix& m, double train_fraction,
                                     std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0,1), got " +
                          std::to_string(train_fraction));
    if (m.nnz() < 2) throw ConfigError("need at least 2 observed entries to split");

    const std::size_t nnz = m.nnz();
    std::size_t train_count =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(nnz)));
    train_count = std::min(std::max<std::size_t>(train_count, 1), nnz - 1);

    std::vector<std::size_t> order(nnz);
    for (std::size_t i = 0; i < nnz; ++i) order[i] = i;
    rng::Engine eng(rng::derive(seed, 0));
    rng::shuffle(order, eng);

    std::vector<MaskedMatrix::Entry> train_entries;
    std::vector<MaskedMatrix::Entry> test_entries;
    train_entries.reserve(train_count);
    test_entries.reserve(nnz - train_count);
    for (std::size_t i = 0; i < nnz; ++i) {
        const MaskedMatrix::Entry& e = m.entries()[order[i]];
        (i < train_count ? train_entries : test_entries).push_back(e);
    }
    return {MaskedMatrix(m.rows(), m.cols(), std::move(train_entries)),
            MaskedMatrix(m.rows(), m.cols(), std::move(test_entries)), seed};
}

inline std::vector<MaskedMatrix> apply_partition(const ClientPartition& part,
                                                 const MaskedMatrix& m);

/// Splits rows into p contiguous blocks with sizes differing by at most one.
/// Rows keep their original order unless `shuffle` permutes them first.
inline ClientPartition partition_clients(const MaskedMatrix& m, std::size_t p, std::uint64_t seed,
                                         bool shuffle = false) {
    if (p == 0) throw ConfigError("client count must be positive");
    if (p > m.rows())
        throw ConfigError("client count " + std::to_string(p) + " exceeds row count " +
                          std::to_string(m.rows()));

    ClientPartition part;
    part.row_order.resize(m.rows());
    for (std::size_t t = 0; t < m.rows(); ++t) part.row_order[t] = t;
    if (shuffle) {
        rng::Engine eng(rng::derive(seed, 1));
        rng::shuffle(part.row_order, eng);
    }

    const std::size_t base = m.rows() / p;
    const std::size_t extra = m.rows() % p;
    part.boundaries.resize(p + 1);
    part.boundaries[0] = 0;
    for (std::size_t i = 0; i < p; ++i)
        part.boundaries[i + 1] = part.boundaries[i] + base + (i < extra ? 1 : 0);

    part.blocks = apply_partition(part, m);
    return part;
}

/// Re-blocks any matrix over the same row universe with the same layout
/// (used to carry the test mask alongside the train partition). Entry rows
/// are re-indexed to block-local coordinates.
inline std::vector<MaskedMatrix> apply_partition(const ClientPartition& part,
                                                 const MaskedMatrix& m) {
    if (m.rows() != part.row_order.size())
        throw DimensionError("partition built for " + std::to_string(part.row_order.size()) +
                             " rows, matrix has " + std::to_string(m.rows()));
    const std::size_t p = part.boundaries.size() - 1;
    std::vector<std::size_t> block_of(m.rows());
    std::vector<std::size_t> local_row(m.rows());
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t at = part.boundaries[i]; at < part.boundaries[i + 1]; ++at) {
            block_of[part.row_order[at]] = i;
            local_row[part.row_order[at]] = at - part.boundaries[i];
        }
    }
    std::vector<std::vector<MaskedMatrix::Entry>> per_block(p);
    for (const MaskedMatrix::Entry& e : m.entries())
        per_block[block_of[e.row]].push_back({local_row[e.row], e.col, e.value});
    std::vector<MaskedMatrix> blocks;
    blocks.reserve(p);
    for (std::size_t i = 0; i < p; ++i)
        blocks.emplace_back(part.boundaries[i + 1] - part.boundaries[i], m.cols(),
                            std::move(per_block[i]));
    return blocks;
}

} // namespace fedmc
