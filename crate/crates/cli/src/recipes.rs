//! Bundled, ready-to-run experiment recipes.

pub const RECIPES: &[(&str, &str)] = &[
    (
        "conjugate-gaussian",
        include_str!("../recipes/conjugate-gaussian.toml"),
    ),
    ("torus-laplace", include_str!("../recipes/torus-laplace.toml")),
    ("spherical", include_str!("../recipes/spherical.toml")),
    ("subordinated", include_str!("../recipes/subordinated.toml")),
    ("girsanov", include_str!("../recipes/girsanov.toml")),
];

pub fn find(name: &str) -> Option<&'static str> {
    RECIPES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    RECIPES.iter().map(|(n, _)| *n).collect()
}
