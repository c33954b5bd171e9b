//! Small hand-checkable graphs used by the test suites and the README.
//!
//! `toy_graph` is the canonical five-entity fixture: artists `A` and `B`
//! (the items), a song `S` both wrote, a genre node `g` both play, and an
//! isolated country `c`; `A` is married to `B`.

use crate::graph::{Entity, GraphParts, KnowledgeGraph, LoadStats, Triple};

pub fn toy_parts() -> GraphParts {
    GraphParts {
        entities: vec![
            Entity::new("A", "artist", "George Jones"),
            Entity::new("B", "artist", "Tammy Wynette"),
            Entity::new("S", "song", "Our Private Life"),
            Entity::new("g", "genre_node", "country"),
            Entity::new("c", "country", "United States"),
        ],
        triples: vec![
            Triple::new("A", "wrote", "S"),
            Triple::new("B", "wrote", "S"),
            Triple::new("A", "genre", "g"),
            Triple::new("B", "genre", "g"),
            Triple::new("A", "married_to", "B"),
        ],
        items: vec!["A".into(), "B".into()],
    }
}

pub fn toy_graph() -> (KnowledgeGraph, LoadStats) {
    KnowledgeGraph::from_parts(&toy_parts()).expect("toy fixture is valid")
}

/// The toy graph extended with extra entities, triples and items.
pub fn toy_graph_with(
    entities: &[(&str, &str, &str)],
    triples: &[Triple],
    items: &[&str],
) -> (KnowledgeGraph, LoadStats) {
    let mut parts = toy_parts();
    parts
        .entities
        .extend(entities.iter().map(|&(id, t, v)| Entity::new(id, t, v)));
    parts.triples.extend(triples.iter().cloned());
    parts.items.extend(items.iter().map(|s| s.to_string()));
    KnowledgeGraph::from_parts(&parts).expect("extended toy fixture is valid")
}

/// The toy graph plus a second song `S2` written by both artists.
pub fn toy_with_second_song() -> (KnowledgeGraph, LoadStats) {
    toy_graph_with(
        &[("S2", "song", "Golden Ring")],
        &[Triple::new("A", "wrote", "S2"), Triple::new("B", "wrote", "S2")],
        &[],
    )
}

/// The toy graph plus an item `C` linked to `A` by exactly one length-2
/// path (through a label node `L`) and not linked to `B` except via `A`.
pub fn toy_with_third_item() -> (KnowledgeGraph, LoadStats) {
    toy_graph_with(
        &[("C", "artist", "Melba Montgomery"), ("L", "label", "Musicor")],
        &[Triple::new("A", "signed_to", "L"), Triple::new("C", "signed_to", "L")],
        &["C"],
    )
}

/// Template lines covering the toy graph's three path types.
pub const TOY_TEMPLATES: &str = "\
artist>married_to>artist\t{e1} was married to {e2}.
artist>wrote>song<wrote<artist\t{e1} wrote \"{e2}\" and {e3} also wrote the same song.
artist>genre>genre_node<genre<artist\t{e1} has made {e2} music, and so did {e3}.
";

/// A graph shaped after the Tammy Wynette / George Jones example: six
/// connecting path types between the two query artists, with a background
/// population of other artists that makes the types progressively more
/// frequent (married rarest, solo-artist most common).
pub fn couple_parts() -> GraphParts {
    let mut entities = vec![
        Entity::new("tammy", "artist", "Tammy Wynette"),
        Entity::new("george", "artist", "George Jones"),
        Entity::new("georgette", "artist", "Georgette Jones"),
        Entity::new("song_opl", "song", "Our Private Life"),
        Entity::new("genre_country", "genre", "country"),
        Entity::new("country_us", "country", "United States"),
        Entity::new("type_solo", "artist_type", "solo artist"),
    ];
    let mut triples = vec![
        Triple::new("george", "married_to", "tammy"),
        Triple::new("tammy", "parent_of", "georgette"),
        Triple::new("george", "parent_of", "georgette"),
        Triple::new("tammy", "wrote", "song_opl"),
        Triple::new("george", "wrote", "song_opl"),
        Triple::new("tammy", "genre", "genre_country"),
        Triple::new("george", "genre", "genre_country"),
        Triple::new("tammy", "based_in", "country_us"),
        Triple::new("george", "based_in", "country_us"),
        Triple::new("tammy", "artist_type", "type_solo"),
        Triple::new("george", "artist_type", "type_solo"),
    ];
    let mut items = vec!["tammy".to_string(), "george".to_string()];

    // Background artists p00..p09. Membership decides how many item pairs
    // share each attribute, i.e. how frequent each path type is.
    let background = 10;
    for i in 0..background {
        let id = format!("p{i:02}");
        entities.push(Entity::new(&id, "artist", format!("Artist {i}")));
        items.push(id.clone());
        // Everybody is a solo artist: most frequent type.
        triples.push(Triple::new(&id, "artist_type", "type_solo"));
        // Seven are based in the United States.
        if i < 7 {
            triples.push(Triple::new(&id, "based_in", "country_us"));
        }
        // Five play country.
        if i < 5 {
            triples.push(Triple::new(&id, "genre", "genre_country"));
        }
    }
    // A co-written song between two background artists.
    entities.push(Entity::new("song_x", "song", "Some Duet"));
    triples.push(Triple::new("p00", "wrote", "song_x"));
    triples.push(Triple::new("p01", "wrote", "song_x"));
    // A second married couple, and a second co-parent pair.
    triples.push(Triple::new("p02", "married_to", "p03"));
    entities.push(Entity::new("kid_y", "artist", "Junior"));
    triples.push(Triple::new("p04", "parent_of", "kid_y"));
    triples.push(Triple::new("p05", "parent_of", "kid_y"));
    // Extra written songs, so the wrote type outnumbers parent_of.
    entities.push(Entity::new("song_z", "song", "Another Duet"));
    triples.push(Triple::new("p06", "wrote", "song_z"));
    triples.push(Triple::new("p07", "wrote", "song_z"));
    triples.push(Triple::new("p08", "wrote", "song_z"));

    GraphParts {
        entities,
        triples,
        items,
    }
}

pub fn couple_graph() -> (KnowledgeGraph, LoadStats) {
    KnowledgeGraph::from_parts(&couple_parts()).expect("couple fixture is valid")
}

/// Templates rendering the six path types of the couple fixture.
pub const COUPLE_TEMPLATES: &str = "\
artist>married_to>artist\t{e1} was married to {e2}.
artist>parent_of>artist<parent_of<artist\t{e1} was the parent of the artist {e2} and {e3} was also the parent of the same artist.
artist>wrote>song<wrote<artist\t{e1} wrote \"{e2}\" and {e3} also wrote the same song.
artist>genre>genre<genre<artist\t{e1} has made {e2} music, and so did {e3}.
artist>based_in>country<based_in<artist\t{e1} was based in {e2} and {e3} was based in the same country.
artist>artist_type>artist_type<artist_type<artist\t{e1} was a {e2}, and {e3} was a {e2}.
";
