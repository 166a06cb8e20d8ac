#pragma once

#include "frh/concepts.hpp"
#include "frh/token_space.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace frh {

/**
 * Space bundle directory:
 *
 *   unembedding.frht  W_U (V x d)
 *   bias.frht         u0 (1 x d)
 *   metric.frht       M (d x d)
 *   vocab.txt
 *   manifest.json     {"format","d","vocab","lambda","files"}
 *
 * Loading re-derives u0 and M from the stored W_U and lambda; the bias and
 * metric files are there for external consumers.
 */
struct SpaceBundle {
  UnembeddingSpace space;
  Vocab vocab;
};

void write_space_bundle(const std::filesystem::path& dir, const UnembeddingSpace& space,
                        const Vocab& vocab);
SpaceBundle load_space_bundle(const std::filesystem::path& dir);

/**
 * Concept store: a flat directory holding, per concept, `<stem>.frht` (the
 * d x r frame) and `<stem>.json` (one JSON line of metadata). Writers do not
 * lock; the last writer wins.
 */
std::string concept_file_stem(const std::string& id);

void save_concept(const std::filesystem::path& store, const ConceptFrame& target);
/// Throws NotFoundError if the concept is absent.
ConceptFrame load_concept(const std::filesystem::path& store, const std::string& id);
/// Ids of every stored concept, sorted.
std::vector<std::string> list_concepts(const std::filesystem::path& store);

}  // namespace frh
