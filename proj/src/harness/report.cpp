#include "genprior/harness.hpp"

#include "genprior/network.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace genprior::harness {
namespace {

std::string csv_cell(const FieldValue& value) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (v.find_first_of(",\"\n") == std::string::npos) return v;
                std::string quoted = "\"";
                for (const char c : v) {
                    if (c == '"') quoted += '"';
                    quoted += c;
                }
                return quoted + "\"";
            } else {
                return std::to_string(v);
            }
        },
        value);
}

nlohmann::ordered_json json_value(const FieldValue& value) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else {
                return v;
            }
        },
        value);
}

std::vector<Field> flat_record(const ReportRow& row) {
    std::vector<Field> record{{"experiment", row.experiment},
                              {"trial", static_cast<std::uint64_t>(row.trial)},
                              {"seed", row.seed},
                              {"instance_seed", row.instance_seed}};
    record.insert(record.end(), row.parameters.begin(), row.parameters.end());
    record.insert(record.end(), row.outputs.begin(), row.outputs.end());
    record.push_back({"status", row.status});
    return record;
}

}  // namespace

std::optional<ReportFormat> parse_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    return std::nullopt;
}

std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format) {
    require(!rows.empty(), "report has no rows");
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        const std::vector<Field> header = flat_record(rows.front());
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i].name;
        out << '\n';
        for (const ReportRow& row : rows) {
            const std::vector<Field> record = flat_record(row);
            require(record.size() == header.size(), "report rows have differing columns");
            for (std::size_t i = 0; i < record.size(); ++i) out << (i ? "," : "") << csv_cell(record[i].value);
            out << '\n';
        }
        return out.str();
    }
    nlohmann::ordered_json array = nlohmann::ordered_json::array();
    for (const ReportRow& row : rows) {
        nlohmann::ordered_json record = nlohmann::ordered_json::object();
        for (const Field& f : flat_record(row)) record[f.name] = json_value(f.value);
        array.push_back(std::move(record));
    }
    return array.dump(2) + "\n";
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::filesystem::path& path) {
    const std::string text = format_report(rows, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed while writing " + path.string());
}

}  // namespace genprior::harness
