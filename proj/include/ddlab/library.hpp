#pragma once

#include "ddlab/sequence.hpp"
#include "ddlab/sequence_data.hpp"  // generated at configure time from data/sequences/v1

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ddlab {

inline std::vector<std::string> library_names() {
    std::vector<std::string> out;
    for (const auto& f : embedded::kSequenceFiles) out.push_back(parse_sequence_file(f.text).name);
    return out;
}

inline PulseSequence sequence_library(std::string_view name) {
    for (const auto& f : embedded::kSequenceFiles) {
        PulseSequence s = parse_sequence_file(f.text);
        if (s.name == name) return s;
    }
    throw InputError("unknown library sequence '" + std::string(name) + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// library name first, then a path on disk
inline PulseSequence load_sequence(const std::string& name_or_path) {
    for (const auto& f : embedded::kSequenceFiles) {
        PulseSequence s = parse_sequence_file(f.text);
        if (s.name == name_or_path) return s;
    }
    if (!std::filesystem::is_regular_file(name_or_path))
        throw InputError("'" + name_or_path + "' is neither a library sequence nor a readable file");
    PulseSequence s = parse_sequence_file(read_text_file(name_or_path));
    if (s.name.empty()) s.name = std::filesystem::path(name_or_path).stem().string();
    return s;
}

}  // namespace ddlab
