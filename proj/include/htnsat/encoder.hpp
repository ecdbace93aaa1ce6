#pragma once

#include <optional>
#include <vector>

#include "htnsat/decomposition.hpp"
#include "htnsat/inference.hpp"
#include "htnsat/pdt.hpp"
#include "htnsat/sat.hpp"

namespace htnsat {

struct EncoderConfig {
    sat::AmoConfig amo;
    bool mutex = true;
    // Abstract ops imply their mandatory preconditions in every query, not only the relaxed one.
    bool mandpre_prune = true;
};

/// Decoded model of a query.
struct DtCandidate {
    DecompositionTree tree;
    std::vector<TaskRef> frontier;
    bool relaxed = false;
    // Bottom-layer positions of abstract leaves, in frontier order.
    std::vector<int> abstract_positions;
    // PDT nodes used by the tree; -1 entries are omitted.
    std::vector<int> pdt_nodes;
};

/// Literals of one grid position.
struct PositionVars {
    std::vector<sat::Lit> actions;    // parallel to Position::actions
    std::vector<sat::Lit> abstracts;  // parallel to Position::abstracts
    std::vector<sat::Lit> methods;    // parallel to Position::methods
    sat::Lit blank;                   // value 0 when blank is no candidate
};

struct LayerVars {
    std::vector<PositionVars> positions;
    // boundaries[b][f]: fact f before position b; b = size is after the last position.
    std::vector<std::vector<sat::Lit>> boundaries;
    sat::Lit solution;  // A_l
    sat::Lit relaxed;   // R_l
};

struct QueryOutcome {
    sat::Result result = sat::Result::Unknown;
    std::optional<DtCandidate> candidate;
};

/// Incremental translation of a PDT grid into a SatSession.
class Encoder {
public:
    Encoder(const Problem& p, const Inference& inf, sat::SatSession& s, const EncoderConfig& cfg);

    /// Encodes every grid layer not yet encoded; earlier layers must be unchanged.
    void encode(const Pdt& pdt);
    int encoded_layers() const { return static_cast<int>(layers_.size()); }
    const std::vector<LayerVars>& vars() const { return layers_; }

    /// Query under [A_L] for the bottom layer L. A Sat result carries a candidate
    /// whose plan was re-verified; a failed re-verification throws InternalError.
    QueryOutcome solve_solution(const Pdt& pdt, std::optional<sat::Deadline> deadline = std::nullopt);
    /// Query under [R_L].
    QueryOutcome solve_relaxed(const Pdt& pdt, std::optional<sat::Deadline> deadline = std::nullopt);

    /// Reads the current model. Throws InternalError when a position on the
    /// selected path has several true ops or the linkage is broken.
    DtCandidate decode(const Pdt& pdt, bool relaxed) const;

private:
    void encode_first_layer(const Grid& g);
    void encode_next_layer(const Pdt& pdt, int l);
    void encode_bottom(const Grid& g, int l);
    std::vector<bool> changeable_at(const Position& pos) const;

    const Problem& problem_;
    const Inference& inf_;
    sat::SatSession& s_;
    EncoderConfig cfg_;
    std::vector<std::vector<FactId>> mutex_groups_;
    std::vector<LayerVars> layers_;
    std::vector<std::vector<char>> fresh_;  // per layer, per boundary: holds at least one new variable
};

}  // namespace htnsat
