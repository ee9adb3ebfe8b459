#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowsentinel {

enum class ClassificationMode : std::uint8_t { Binary = 0, Grouped = 1, Multi = 2 };

std::string_view to_string(ClassificationMode mode);
/// Accepts "binary", "grouped", "multi" (case-sensitive). Throws InvalidConfig.
ClassificationMode parse_mode(std::string_view text);
/// 2, 8 and 34.
std::size_t class_count(ClassificationMode mode);

inline constexpr std::string_view kBenignFamily = "Benign";

/// Raw dataset label -> attack family. The family named "Benign" marks the
/// benign traffic label(s). Loaded from an editable CSV (raw_label,family).
struct LabelFamilies {
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string_view> family_of(std::string_view raw) const;
    bool is_benign(std::string_view raw) const;
};

/// The 34-label CICIoT2023 table (33 attacks + BenignTraffic) grouped into
/// Benign and seven attack families. Identical to data/label_families.csv.
const LabelFamilies& default_label_families();
/// Throws FileNotFound / InvalidConfig.
LabelFamilies load_label_families(const std::filesystem::path& path);

enum class LabelPolicy { Strict, Lenient };

struct LabelVocabulary {
    ClassificationMode mode = ClassificationMode::Binary;
    std::vector<std::string> classes;
    std::map<std::string, std::uint16_t, std::less<>> raw_to_class;

    std::optional<std::uint16_t> lookup(std::string_view raw) const;
    std::size_t size() const noexcept { return classes.size(); }
};

/// Binary: {Benign=0, Attack=1}; every label whose family is not Benign
/// (including labels missing from the family table) is Attack.
/// Grouped: family names sorted lexicographically (8 classes).
/// Multi: raw labels of the family table sorted lexicographically (34).
///
/// `raw_labels` are the distinct labels present in the data. Strict policy
/// throws UnknownLabel for a Grouped/Multi label missing from the table;
/// lenient leaves it unmapped so the caller drops and counts the row.
/// Throws EmptyInput when raw_labels is empty, InvalidConfig when the family
/// table does not produce exactly class_count(mode) classes.
LabelVocabulary build_vocabulary(const std::vector<std::string>& raw_labels, ClassificationMode mode,
                                 const LabelFamilies& families = default_label_families(),
                                 LabelPolicy policy = LabelPolicy::Lenient);

/// Rebuilds a vocabulary from its mode and class list (as stored in model
/// files), without a raw-label map.
LabelVocabulary vocabulary_from_classes(ClassificationMode mode, std::vector<std::string> classes);

}  // namespace flowsentinel
