#pragma once

#include <filesystem>
#include <string>

#include "decompnet/model.hpp"

namespace decompnet {

inline constexpr int kSchemaVersion = 1;

/// How parameter arrays are written: IEEE-754 bit patterns as "0x" + 16 hex
/// digits, or decimal strings with 17 significant digits. Both round-trip exactly.
enum class NumberEncoding { Hex, Decimal };

std::string encode_double(double v, NumberEncoding enc);
/// Throws LoadError naming `path` on malformed input.
double decode_double(const std::string& s, NumberEncoding enc, const std::string& path = "value");

std::string model_to_string(const DecomposerModel& model, NumberEncoding enc = NumberEncoding::Hex);
DecomposerModel model_from_string(const std::string& text);
void export_model(const DecomposerModel& model, const std::filesystem::path& path,
                  NumberEncoding enc = NumberEncoding::Hex);
DecomposerModel load_model(const std::filesystem::path& path);

std::string dataset_to_string(const Dataset& ds, NumberEncoding enc = NumberEncoding::Hex);
Dataset dataset_from_string(const std::string& text);
void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  NumberEncoding enc = NumberEncoding::Hex);
Dataset load_dataset(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace decompnet
