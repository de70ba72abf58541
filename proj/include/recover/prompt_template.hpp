#pragma once

// Versioned prompt text. Experiments cite kPromptVersion; any wording
// change must bump it so runs remain comparable.

namespace recover {

inline constexpr const char* kPromptVersion = "v1";

inline constexpr const char* kPromptRoleLine =
    "You are a transcript entity corrector for speech-recognition output.";

// The three hard constraints every proposal must follow.
inline constexpr const char* kPromptRules =
    "Rules:\n"
    "1. Every replacement must be exactly one of the candidate entity phrases "
    "listed below. Never invent a phrase.\n"
    "2. Do not rewrite anything else: no grammar, punctuation, filler-word, or "
    "casing-only changes.\n"
    "3. Correcting near-miss entity mentions is encouraged (for example "
    "\"citeva\" -> \"cytiva\").\n";

inline constexpr const char* kPromptSchemaCorrect =
    "Return a single JSON object, and nothing else, in exactly this shape:\n"
    "{\"edits\": [{\"start\": <int>, \"end\": <int>, \"find\": \"<original span>\", "
    "\"replace\": \"<entity phrase>\", \"entity_type\": \"<type or null>\", "
    "\"confidence\": <number 0..1>, \"reason\": \"<short reason>\"}]}\n"
    "Offsets are 0-based character positions into the transcript, with end "
    "exclusive. If nothing needs correction, return {\"edits\": []}.\n";

inline constexpr const char* kPromptSchemaSelect =
    "Return a single JSON object, and nothing else, in exactly this shape:\n"
    "{\"chosen_variant\": <int>, \"edits\": [{\"start\": <int>, \"end\": <int>, "
    "\"find\": \"<original span>\", \"replace\": \"<entity phrase>\", "
    "\"entity_type\": \"<type or null>\", \"confidence\": <number 0..1>, "
    "\"reason\": \"<short reason>\"}]}\n"
    "chosen_variant is the index of the best variant; offsets are 0-based "
    "character positions into that variant, with end exclusive. If the chosen "
    "variant needs no correction, return an empty edits array.\n";

inline constexpr const char* kPromptNoCandidates =
    "No candidate entity phrases were retrieved for this segment; propose no "
    "edits.\n";

}  // namespace recover
