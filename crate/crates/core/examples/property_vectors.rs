//! Encode the non-learned properties of a user and lay them out in the
//! standard, forum and post-only property vectors.

use std::sync::Arc;

use riskgraph::data_model::{generate_synthetic_cohort, SynthConfig};
use riskgraph::kg_builder::{
    assemble_property_vector, Category, EncodeOptions, LayoutOptions, PropertyLayout, UserProperties,
};
use riskgraph::post_encoder::PostBehaviorVector;

fn main() -> riskgraph::Result<()> {
    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(20, 0.5), 2)?;
    let user = dataset.users.iter().find(|u| u.label == 1).expect("an at-risk user");
    let props = UserProperties::encode(user, &dataset.lexicons, &EncodeOptions::default())?;

    let layout = Arc::new(PropertyLayout::standard());
    println!("standard layout: {layout}");
    let vector = assemble_property_vector(&props, &PostBehaviorVector::zeros(), &layout)?;
    println!("user {} (label {}):", user.user_id, user.label);
    for entry in layout.entries() {
        let values = vector.segment(&entry.name).expect("segment in layout");
        if entry.name == "post_behavior" {
            println!("  {:<22} {} slots, filled by the post encoder", entry.name, values.len());
        } else {
            let shown: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
            println!("  {:<22} [{}]", entry.name, shown.join(", "));
        }
    }

    let forum = PropertyLayout::with_options(&LayoutOptions {
        disabled_categories: [Category::PersonalInformation, Category::SocialInteraction].into_iter().collect(),
        ..LayoutOptions::default()
    });
    println!("forum layout width {}", forum.total_width());
    println!("post-only layout width {}", PropertyLayout::post_behavior_only().total_width());
    Ok(())
}
