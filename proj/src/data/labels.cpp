#include "flowsentinel/labels.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "flowsentinel/csv.hpp"
#include "flowsentinel/error.hpp"

namespace flowsentinel {

std::string_view to_string(ClassificationMode mode) {
    switch (mode) {
        case ClassificationMode::Binary: return "binary";
        case ClassificationMode::Grouped: return "grouped";
        case ClassificationMode::Multi: return "multi";
    }
    return "unknown";
}

ClassificationMode parse_mode(std::string_view text) {
    if (text == "binary") return ClassificationMode::Binary;
    if (text == "grouped") return ClassificationMode::Grouped;
    if (text == "multi") return ClassificationMode::Multi;
    fail(ErrorKind::InvalidConfig, "unknown mode '" + std::string(text) + "' (expected binary, grouped or multi)");
}

std::size_t class_count(ClassificationMode mode) {
    switch (mode) {
        case ClassificationMode::Binary: return 2;
        case ClassificationMode::Grouped: return 8;
        case ClassificationMode::Multi: return 34;
    }
    return 0;
}

std::optional<std::string_view> LabelFamilies::family_of(std::string_view raw) const {
    for (const auto& [label, family] : entries)
        if (label == raw) return family;
    return std::nullopt;
}

bool LabelFamilies::is_benign(std::string_view raw) const {
    const auto family = family_of(raw);
    return family && *family == kBenignFamily;
}

const LabelFamilies& default_label_families() {
    static const LabelFamilies families{{
        {"BenignTraffic", "Benign"},
        {"DDoS-ACK_Fragmentation", "DDoS"},
        {"DDoS-HTTP_Flood", "DDoS"},
        {"DDoS-ICMP_Flood", "DDoS"},
        {"DDoS-ICMP_Fragmentation", "DDoS"},
        {"DDoS-PSHACK_Flood", "DDoS"},
        {"DDoS-RSTFINFlood", "DDoS"},
        {"DDoS-SYN_Flood", "DDoS"},
        {"DDoS-SlowLoris", "DDoS"},
        {"DDoS-SynonymousIP_Flood", "DDoS"},
        {"DDoS-TCP_Flood", "DDoS"},
        {"DDoS-UDP_Flood", "DDoS"},
        {"DDoS-UDP_Fragmentation", "DDoS"},
        {"DoS-HTTP_Flood", "DoS"},
        {"DoS-SYN_Flood", "DoS"},
        {"DoS-TCP_Flood", "DoS"},
        {"DoS-UDP_Flood", "DoS"},
        {"Mirai-greeth_flood", "Mirai"},
        {"Mirai-greip_flood", "Mirai"},
        {"Mirai-udpplain", "Mirai"},
        {"Recon-HostDiscovery", "Recon"},
        {"Recon-OSScan", "Recon"},
        {"Recon-PingSweep", "Recon"},
        {"Recon-PortScan", "Recon"},
        {"VulnerabilityScan", "Recon"},
        {"DNS_Spoofing", "Spoofing"},
        {"MITM-ArpSpoofing", "Spoofing"},
        {"Backdoor_Malware", "Web-based"},
        {"BrowserHijacking", "Web-based"},
        {"CommandInjection", "Web-based"},
        {"SqlInjection", "Web-based"},
        {"Uploading_Attack", "Web-based"},
        {"XSS", "Web-based"},
        {"DictionaryBruteForce", "BruteForce"},
    }};
    return families;
}

LabelFamilies load_label_families(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::FileNotFound, "label family file not found: " + path.string());
    LabelFamilies families;
    std::string line;
    bool header = true;
    std::set<std::string, std::less<>> seen;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_csv_line(line);
        if (header) {
            header = false;
            if (fields.size() == 2 && fields[0] == "raw_label") continue;
        }
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            fail(ErrorKind::InvalidConfig, "label family file " + path.string() + ": expected 'raw_label,family', got '" + line + "'");
        if (!seen.insert(fields[0]).second)
            fail(ErrorKind::InvalidConfig, "label family file " + path.string() + ": duplicate label " + fields[0]);
        families.entries.emplace_back(fields[0], fields[1]);
    }
    return families;
}

std::optional<std::uint16_t> LabelVocabulary::lookup(std::string_view raw) const {
    const auto it = raw_to_class.find(raw);
    if (it == raw_to_class.end()) return std::nullopt;
    return it->second;
}

LabelVocabulary vocabulary_from_classes(ClassificationMode mode, std::vector<std::string> classes) {
    if (classes.size() != class_count(mode))
        fail(ErrorKind::InvalidSpec, "mode " + std::string(to_string(mode)) + " needs " +
                                         std::to_string(class_count(mode)) + " classes, got " + std::to_string(classes.size()));
    LabelVocabulary vocab;
    vocab.mode = mode;
    vocab.classes = std::move(classes);
    return vocab;
}

LabelVocabulary build_vocabulary(const std::vector<std::string>& raw_labels, ClassificationMode mode,
                                 const LabelFamilies& families, LabelPolicy policy) {
    if (raw_labels.empty()) fail(ErrorKind::EmptyInput, "build_vocabulary: no labels");
    LabelVocabulary vocab;
    vocab.mode = mode;

    if (mode == ClassificationMode::Binary) {
        vocab.classes = {"Benign", "Attack"};
        for (const auto& [label, family] : families.entries)
            vocab.raw_to_class[label] = family == kBenignFamily ? 0 : 1;
        for (const auto& raw : raw_labels)
            if (!vocab.raw_to_class.contains(raw)) vocab.raw_to_class[raw] = families.is_benign(raw) ? 0 : 1;
        return vocab;
    }

    std::set<std::string> names;
    for (const auto& [label, family] : families.entries) names.insert(mode == ClassificationMode::Grouped ? family : label);
    vocab.classes.assign(names.begin(), names.end());
    if (vocab.classes.size() != class_count(mode))
        fail(ErrorKind::InvalidConfig, "label family table yields " + std::to_string(vocab.classes.size()) + " " +
                                           std::string(to_string(mode)) + " classes, expected " +
                                           std::to_string(class_count(mode)));
    for (const auto& [label, family] : families.entries) {
        const std::string& name = mode == ClassificationMode::Grouped ? family : label;
        const auto pos = std::lower_bound(vocab.classes.begin(), vocab.classes.end(), name) - vocab.classes.begin();
        vocab.raw_to_class[label] = static_cast<std::uint16_t>(pos);
    }
    if (policy == LabelPolicy::Strict)
        for (const auto& raw : raw_labels)
            if (!vocab.raw_to_class.contains(raw)) fail(ErrorKind::UnknownLabel, "label '" + raw + "' is not in the family table");
    return vocab;
}

}  // namespace flowsentinel
