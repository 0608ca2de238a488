#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pf/error.hpp"

namespace pf {

// The three behavioral head types. Byte values double as the on-disk label
// encoding in trace files.
enum class HeadKind : std::uint8_t {
    Anchor = 0,
    Wave = 1,
    Veil = 2,
};

inline constexpr std::uint8_t kUnlabeled = 255;

inline const char* head_kind_name(HeadKind k) {
    switch (k) {
    case HeadKind::Anchor: return "anchor";
    case HeadKind::Wave: return "wave";
    case HeadKind::Veil: return "veil";
    }
    return "?";
}

inline HeadKind head_kind_from_name(const std::string& s) {
    if (s == "anchor")
        return HeadKind::Anchor;
    if (s == "wave")
        return HeadKind::Wave;
    if (s == "veil")
        return HeadKind::Veil;
    fail(Errc::InvalidArgument, "unknown head class '" + s + "'");
}

// Classification result for one head. `period` is present exactly when the
// head is a Wave head.
struct HeadClass {
    HeadKind kind = HeadKind::Anchor;
    std::optional<double> period;

    bool operator==(const HeadClass& o) const {
        return kind == o.kind && period == o.period;
    }
};

// Dense layer x head assignment plus voting provenance.
class HeadClassMap {
public:
    HeadClassMap() = default;
    HeadClassMap(std::size_t layers, std::size_t heads)
        : num_layers_(layers), num_heads_(heads), classes_(layers * heads),
          tie_break_(layers * heads, 0) {
        require(layers >= 1 && heads >= 1, Errc::BadExtent, "head map extents must be >= 1");
    }

    std::size_t num_layers() const { return num_layers_; }
    std::size_t num_heads() const { return num_heads_; }

    HeadClass& at(std::size_t layer, std::size_t head) { return classes_[index(layer, head)]; }
    const HeadClass& at(std::size_t layer, std::size_t head) const {
        return classes_[index(layer, head)];
    }

    void set_tie_break(std::size_t layer, std::size_t head, bool v) {
        tie_break_[index(layer, head)] = v ? 1 : 0;
    }
    bool tie_break(std::size_t layer, std::size_t head) const {
        return tie_break_[index(layer, head)] != 0;
    }

    std::size_t prompts_voted = 0;

    std::size_t count(HeadKind k) const {
        std::size_t n = 0;
        for (const auto& c : classes_)
            if (c.kind == k)
                ++n;
        return n;
    }

private:
    std::size_t index(std::size_t layer, std::size_t head) const {
        require(layer < num_layers_ && head < num_heads_, Errc::OutOfRange,
                "head map index out of range");
        return layer * num_heads_ + head;
    }

    std::size_t num_layers_ = 0;
    std::size_t num_heads_ = 0;
    std::vector<HeadClass> classes_;
    std::vector<std::uint8_t> tie_break_;
};

inline nlohmann::json head_class_map_to_json(const HeadClassMap& map) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < map.num_layers(); ++l) {
        nlohmann::json heads = nlohmann::json::array();
        for (std::size_t h = 0; h < map.num_heads(); ++h) {
            const HeadClass& c = map.at(l, h);
            nlohmann::json j{{"class", head_kind_name(c.kind)}};
            if (c.period)
                j["period"] = *c.period;
            if (map.tie_break(l, h))
                j["tie_break"] = true;
            heads.push_back(std::move(j));
        }
        layers.push_back(nlohmann::json{{"heads", std::move(heads)}});
    }
    return nlohmann::json{{"layers", std::move(layers)},
                          {"prompts_voted", map.prompts_voted}};
}

inline HeadClassMap head_class_map_from_json(const nlohmann::json& j) {
    require(j.contains("layers") && j["layers"].is_array() && !j["layers"].empty(),
            Errc::InvalidArgument, "head map JSON needs a non-empty 'layers' array");
    const auto& layers = j["layers"];
    const std::size_t num_heads = layers[0].at("heads").size();
    HeadClassMap map(layers.size(), num_heads);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& heads = layers[l].at("heads");
        require(heads.size() == num_heads, Errc::InvalidArgument,
                "ragged 'heads' arrays in head map JSON");
        for (std::size_t h = 0; h < num_heads; ++h) {
            HeadClass c;
            c.kind = head_kind_from_name(heads[h].at("class").get<std::string>());
            if (heads[h].contains("period"))
                c.period = heads[h]["period"].get<double>();
            require((c.kind == HeadKind::Wave) == c.period.has_value(), Errc::InvalidArgument,
                    "period must be present exactly for wave heads");
            map.at(l, h) = c;
            if (heads[h].contains("tie_break") && heads[h]["tie_break"].get<bool>())
                map.set_tie_break(l, h, true);
        }
    }
    if (j.contains("prompts_voted"))
        map.prompts_voted = j["prompts_voted"].get<std::size_t>();
    return map;
}

}  // namespace pf
